"""Multi-dyad experiment service.

Pairs consenting participants from a lobby, mediates live games over
websockets, and keeps one durable JSONL log per dyad. Every accepted game
event is appended and flushed before it is acknowledged, so a crash never
loses acknowledged rounds; on restart, unfinished logs are closed with a
dropout marker rather than silently resumed.

Concurrency contract: all handlers run on one event loop; each dyad owns
an asyncio lock, so its events apply strictly in arrival order, while
distinct dyads proceed independently.
"""

from __future__ import annotations

import asyncio
import contextlib
import dataclasses
import io
import json
import os
import random
import secrets
import time
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response

from colexgame.engine import (
    DROPOUT,
    FEEDBACK_SHOWN,
    EngineError,
    GAME_END,
    GameState,
    LogEvent,
    WrongPhaseError,
    advance,
    advance_event,
    apply_guess,
    apply_send,
    dropout_event,
    feedback_event,
    game_end_event,
    game_start_event,
    game_summary,
    guess_event,
    new_game,
    parse_log,
    send_event,
    view_for,
)
from colexgame.lexicon import (
    bundled_lexicon_path,
    bundled_wordlist_path,
    load_lexicon,
    load_wordlist,
    make_stimulus,
)
from colexgame.schedule import (
    CONDITIONS,
    build_schedule,
    pair_frequency_table,
    signals_for_condition,
    variant_for_condition,
)

ENV_PORT = "COLEXGAME_PORT"
ENV_ADMIN_TOKEN = "COLEXGAME_ADMIN_TOKEN"

# websocket close codes for auth problems
WS_UNKNOWN_TOKEN = 4401


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Deployment parameters for one experiment run."""

    condition: str = "baseline"
    n_signals: int | None = None
    lexicon_path: str | None = None
    wordlist_path: str | None = None
    data_dir: str = "data"
    seed: int | None = None
    round_timeout_s: float = 120.0
    dropout_timeout_s: float = 300.0
    port: int = 8000
    admin_token: str = ""

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ConfigError(f"unknown condition {self.condition!r}")
        expected = signals_for_condition(self.condition)
        if self.n_signals is None:
            self.n_signals = expected
        elif self.n_signals != expected:
            raise ConfigError(
                f"condition {self.condition!r} implies {expected} signals, "
                f"config says {self.n_signals}"
            )
        if self.round_timeout_s <= 0 or self.dropout_timeout_s <= 0:
            raise ConfigError("timeouts must be positive")
        if not self.admin_token:
            self.admin_token = secrets.token_hex(16)

    def snapshot(self) -> dict:
        """Config as stored in exports: everything except the admin token."""
        data = dataclasses.asdict(self)
        data.pop("admin_token")
        return data


def load_config(path=None, env=None) -> ExperimentConfig:
    """Read a TOML config file (all keys optional) and apply environment
    overrides for port and admin token."""
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        raw = Path(path).read_bytes()
        try:
            parsed = tomllib.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = sorted(set(parsed) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {unknown}")
        values.update(parsed)
    if env.get(ENV_PORT):
        try:
            values["port"] = int(env[ENV_PORT])
        except ValueError as exc:
            raise ConfigError(f"{ENV_PORT} must be an integer") from exc
    if env.get(ENV_ADMIN_TOKEN):
        values["admin_token"] = env[ENV_ADMIN_TOKEN]
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class Session:
    """One participant: an opaque token, its dyad membership once paired,
    and the live connection if any."""

    token: str
    dyad_id: str | None = None
    role: str | None = None
    socket: WebSocket | None = None
    seq: int = 0
    last_activity: float = field(default_factory=time.monotonic)


class DyadRuntime:
    """Server-side state for one live dyad."""

    def __init__(
        self,
        dyad_id: str,
        condition: str,
        stimulus,
        schedule,
        engine_seed: int,
        tokens: dict[str, str],
        directory: Path,
    ):
        self.dyad_id = dyad_id
        self.condition = condition
        self.stimulus = stimulus
        self.schedule = schedule
        self.state: GameState = new_game(stimulus, schedule, engine_seed)
        self.tokens = tokens
        self.directory = directory
        self.lock = asyncio.Lock()
        self.seen: set[tuple] = set()
        self.advance_acks: dict[int, set[str]] = {}
        self.started = time.monotonic()
        self.last_activity = self.started
        self.dropped = False
        self.completed = False

    @property
    def log_path(self) -> Path:
        return self.directory / "log.jsonl"

    def t_ms(self) -> int:
        return int((time.monotonic() - self.started) * 1000)

    def append(self, event: LogEvent) -> None:
        """Write-ahead append: the line is on disk before the caller acks."""
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(event.to_line() + "\n")
            fh.flush()
            os.fsync(fh.fileno())


class ExperimentServer:
    """All mutable service state; the FastAPI app is a thin shell over it."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.lexicon = load_lexicon(config.lexicon_path or bundled_lexicon_path())
        self.wordlist = load_wordlist(
            config.wordlist_path or bundled_wordlist_path()
        )
        seed = config.seed if config.seed is not None else secrets.randbits(63)
        self.rng = random.Random(seed)
        self.sessions: dict[str, Session] = {}
        self.dyads: dict[str, DyadRuntime] = {}
        self.waiting: list[str] = []
        self.dyad_counter = 0
        self.data_dir = Path(config.data_dir)
        self.dyads_dir = self.data_dir / "dyads"
        self.dyads_dir.mkdir(parents=True, exist_ok=True)
        self.close_unfinished_logs("server_restart")

    # -- lobby --

    def join_lobby(self, consent: bool) -> str:
        if consent is not True:
            raise PermissionError("consent is required to join")
        token = secrets.token_hex(16)
        self.sessions[token] = Session(token=token)
        self.waiting.append(token)
        if len(self.waiting) >= 2:
            self._pair(self.waiting.pop(0), self.waiting.pop(0))
        return token

    def _pair(self, token_a: str, token_b: str) -> DyadRuntime:
        self.dyad_counter += 1
        dyad_id = f"dyad-{self.dyad_counter:04d}-{secrets.token_hex(4)}"
        condition = self.config.condition
        stimulus = make_stimulus(
            self.lexicon,
            self.wordlist,
            variant_for_condition(condition),
            self.config.n_signals,
            seed=self.rng.getrandbits(63),
        )
        schedule = build_schedule(
            pair_frequency_table(stimulus.space, condition),
            self.rng.getrandbits(63),
        )
        engine_seed = self.rng.getrandbits(63)
        directory = self.dyads_dir / dyad_id
        directory.mkdir(parents=True)
        dyad = DyadRuntime(
            dyad_id=dyad_id,
            condition=condition,
            stimulus=stimulus,
            schedule=schedule,
            engine_seed=engine_seed,
            tokens={token_a: "A", token_b: "B"},
            directory=directory,
        )
        (directory / "stimulus.json").write_text(
            stimulus.to_json(), encoding="utf-8"
        )
        (directory / "schedule.json").write_text(
            schedule.to_json(), encoding="utf-8"
        )
        dyad.append(
            game_start_event(
                dyad_id,
                condition,
                stimulus,
                schedule,
                engine_seed,
                dyad.state.first_sender,
            )
        )
        self.dyads[dyad_id] = dyad
        for token in (token_a, token_b):
            session = self.sessions[token]
            session.dyad_id = dyad_id
            session.role = dyad.tokens[token]
        return dyad

    # -- live messaging --

    def _session_for_role(self, dyad: DyadRuntime, role: str) -> Session:
        token = next(t for t, r in dyad.tokens.items() if r == role)
        return self.sessions[token]

    async def _push(self, session: Session, type_: str, round_no: int,
                    payload: dict) -> None:
        socket = session.socket
        if socket is None:
            return
        session.seq += 1
        message = {
            "type": type_,
            "round": round_no,
            "payload": payload,
            "seq": session.seq,
        }
        try:
            await socket.send_json(message)
        except Exception:
            session.socket = None

    async def push_view(self, dyad: DyadRuntime, role: str) -> None:
        session = self._session_for_role(dyad, role)
        if dyad.dropped:
            await self._push(
                session, "partner_dropout", dyad.state.round,
                {"reason": "partner left the game"},
            )
        elif dyad.state.finished:
            await self._push(
                session, "game_end", dyad.state.n_rounds,
                game_summary(dyad.state).to_dict(),
            )
        else:
            view = view_for(dyad.state, role)
            await self._push(session, "view", view.round, view.to_dict())

    async def push_views(self, dyad: DyadRuntime) -> None:
        for role in ("A", "B"):
            await self.push_view(dyad, role)

    async def handle_event(self, token: str, message: dict) -> None:
        """Route one client message through the engine under the dyad lock."""
        session = self.sessions[token]
        session.last_activity = time.monotonic()
        dyad = self.dyads.get(session.dyad_id or "")
        if dyad is None:
            await self._push(
                session, "error", 0,
                {"code": "not_paired", "error": "no dyad for this token"},
            )
            return
        role = session.role
        type_ = message.get("type")
        round_no = message.get("round")
        payload = message.get("payload") or {}
        if type_ == "feedback":
            self.record_feedback(
                token,
                str(payload.get("text", "")),
                bool(payload.get("took_notes", False)),
            )
            await self._push(session, "feedback_ack", dyad.state.round, {})
            return
        async with dyad.lock:
            dyad.last_activity = time.monotonic()
            if dyad.dropped or dyad.completed:
                await self.push_view(dyad, role)
                return
            if type_ == "send":
                key = ("send", round_no)
            elif type_ == "guess":
                key = ("guess", round_no)
            elif type_ == "advance":
                key = ("advance", round_no, role)
            else:
                await self._push(
                    session, "error", dyad.state.round,
                    {"code": "unknown_type",
                     "error": f"unknown message type {type_!r}"},
                )
                return
            if key in dyad.seen:
                # duplicate of an already-applied event: re-ack, no log
                await self.push_view(dyad, role)
                return
            if round_no != dyad.state.round:
                await self._push(
                    session, "error", dyad.state.round,
                    {"code": "round_mismatch",
                     "error": f"message names round {round_no}, "
                              f"game is at {dyad.state.round}"},
                )
                return
            try:
                if type_ == "send":
                    await self._apply_send(dyad, role, payload)
                elif type_ == "guess":
                    await self._apply_guess(dyad, role, payload)
                else:
                    await self._apply_advance(dyad, role)
            except EngineError as exc:
                await self._push(
                    session, "error", dyad.state.round,
                    {"code": type(exc).__name__, "error": str(exc)},
                )
                return
            dyad.seen.add(key)

    async def _apply_send(self, dyad: DyadRuntime, role: str,
                          payload: dict) -> None:
        signal = payload.get("signal")
        t = dyad.t_ms()
        next_state = apply_send(dyad.state, role, signal, t)
        dyad.append(send_event(dyad.state.round, role, signal, t))
        dyad.state = next_state
        await self.push_views(dyad)

    async def _apply_guess(self, dyad: DyadRuntime, role: str,
                           payload: dict) -> None:
        meaning = payload.get("meaning")
        t = dyad.t_ms()
        next_state = apply_guess(dyad.state, role, meaning, t)
        record = next_state.history[-1]
        dyad.append(guess_event(dyad.state.round, role, meaning, t))
        dyad.append(feedback_event(record, t))
        dyad.state = next_state
        await self.push_views(dyad)

    async def _apply_advance(self, dyad: DyadRuntime, role: str) -> None:
        if dyad.state.phase != FEEDBACK_SHOWN:
            raise WrongPhaseError(
                f"cannot advance during {dyad.state.phase}"
            )
        acks = dyad.advance_acks.setdefault(dyad.state.round, set())
        acks.add(role)
        if len(acks) < 2:
            # first acker waits on the partner; answer so every message
            # gets a response
            await self.push_view(dyad, role)
            return
        t = dyad.t_ms()
        round_no = dyad.state.round
        next_state = advance(dyad.state)
        dyad.append(advance_event(round_no, t))
        dyad.state = next_state
        if next_state.finished:
            dyad.append(
                game_end_event(game_summary(next_state), round_no, t)
            )
            dyad.completed = True
        await self.push_views(dyad)

    # -- feedback form --

    def record_feedback(self, token: str, text: str, took_notes: bool) -> None:
        session = self.sessions.get(token)
        if session is None:
            raise KeyError("unknown token")
        if session.dyad_id is None:
            raise LookupError("not paired yet")
        dyad = self.dyads[session.dyad_id]
        path = dyad.directory / "feedback.json"
        entries = []
        if path.exists():
            entries = json.loads(path.read_text(encoding="utf-8"))
        entries.append(
            {"role": session.role, "text": text, "took_notes": took_notes}
        )
        path.write_text(
            json.dumps(entries, indent=2, sort_keys=True), encoding="utf-8"
        )

    # -- dropout handling --

    async def _abandon(self, dyad: DyadRuntime, reason: str) -> None:
        async with dyad.lock:
            if dyad.dropped or dyad.completed:
                return
            dyad.append(
                dropout_event(dyad.state.round, None, reason, dyad.t_ms())
            )
            dyad.dropped = True
        await self.push_views(dyad)

    async def dropout_sweep(self, now: float | None = None) -> list[str]:
        """Close dyads idle past the dropout timeout; returns their ids."""
        now = time.monotonic() if now is None else now
        abandoned = []
        for dyad in list(self.dyads.values()):
            if dyad.dropped or dyad.completed:
                continue
            if now - dyad.last_activity > self.config.dropout_timeout_s:
                await self._abandon(dyad, "idle_timeout")
                abandoned.append(dyad.dyad_id)
        return abandoned

    async def sweep_loop(self) -> None:
        interval = max(0.5, min(5.0, self.config.dropout_timeout_s / 4))
        while True:
            await asyncio.sleep(interval)
            await self.dropout_sweep()

    def close_unfinished_logs(self, reason: str) -> list[str]:
        """Startup crash scan: any persisted log that neither finished nor
        dropped out gets a dropout line, so it can never be mistaken for a
        live or completed game."""
        closed = []
        for log_path in sorted(self.dyads_dir.glob("*/log.jsonl")):
            try:
                events = parse_log(log_path.read_text(encoding="utf-8"))
            except (ValueError, KeyError):
                continue
            if not events:
                continue
            if any(e.event in (GAME_END, DROPOUT) for e in events):
                continue
            last = events[-1]
            line = dropout_event(
                last.round, None, reason, last.t_ms
            ).to_line()
            with open(log_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            closed.append(log_path.parent.name)
        return closed

    # -- export --

    def admin_export(self, presented_token: str) -> bytes:
        """Zip of every dyad directory plus a config snapshot, with a
        deterministic entry order and fixed timestamps. Requires the
        configured admin token."""
        if not secrets.compare_digest(
            presented_token, self.config.admin_token
        ):
            raise PermissionError("bad admin token")
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as zf:
            self._add_entry(
                zf,
                "config.json",
                json.dumps(self.config.snapshot(), indent=2, sort_keys=True),
            )
            for directory in sorted(self.dyads_dir.iterdir()):
                if not directory.is_dir():
                    continue
                for path in sorted(directory.iterdir()):
                    self._add_entry(
                        zf,
                        f"dyads/{directory.name}/{path.name}",
                        path.read_text(encoding="utf-8"),
                    )
        return buffer.getvalue()

    @staticmethod
    def _add_entry(zf: zipfile.ZipFile, name: str, text: str) -> None:
        info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
        info.compress_type = zipfile.ZIP_DEFLATED
        zf.writestr(info, text)

    # -- health --

    def health(self) -> dict:
        active = sum(
            1
            for d in self.dyads.values()
            if not (d.completed or d.dropped)
        )
        return {
            "status": "ok",
            "condition": self.config.condition,
            "waiting": len(self.waiting),
            "active_dyads": active,
            "completed_dyads": sum(
                1 for d in self.dyads.values() if d.completed
            ),
            "dropped_dyads": sum(
                1 for d in self.dyads.values() if d.dropped
            ),
            "round_timeout_s": self.config.round_timeout_s,
        }


def create_app(config: ExperimentConfig | None = None) -> FastAPI:
    """Build the ASGI app around a fresh ExperimentServer."""
    server = ExperimentServer(config or ExperimentConfig())

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        sweeper = asyncio.create_task(server.sweep_loop())
        try:
            yield
        finally:
            sweeper.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sweeper

    app = FastAPI(title="colexgame server", lifespan=lifespan)
    app.state.server = server

    @app.post("/api/join")
    async def join(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        try:
            token = server.join_lobby(body.get("consent"))
        except PermissionError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        session = server.sessions[token]
        dyad = server.dyads.get(session.dyad_id or "")
        if dyad is not None:
            await server.push_views(dyad)
        return {"token": token, "paired": session.dyad_id is not None}

    @app.post("/api/feedback")
    async def feedback(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        try:
            server.record_feedback(
                body.get("token", ""),
                str(body.get("text", "")),
                bool(body.get("took_notes", False)),
            )
        except KeyError:
            return JSONResponse({"error": "unknown token"}, status_code=404)
        except LookupError:
            return JSONResponse({"error": "not paired"}, status_code=409)
        return {"ok": True}

    @app.get("/api/admin/export")
    async def admin_export(request: Request):
        auth = request.headers.get("authorization", "")
        presented = auth.removeprefix("Bearer ")
        try:
            archive = server.admin_export(presented)
        except PermissionError:
            return JSONResponse({"error": "forbidden"}, status_code=403)
        return Response(
            content=archive,
            media_type="application/zip",
            headers={
                "content-disposition": "attachment; filename=colexgame.zip"
            },
        )

    @app.get("/api/health")
    async def health():
        return server.health()

    @app.websocket("/api/ws")
    async def websocket_endpoint(websocket: WebSocket, token: str = ""):
        await websocket.accept()
        session = server.sessions.get(token)
        if session is None:
            await websocket.close(code=WS_UNKNOWN_TOKEN)
            return
        session.socket = websocket
        session.last_activity = time.monotonic()
        dyad = server.dyads.get(session.dyad_id or "")
        if dyad is None:
            await server._push(
                session, "waiting", 0, {"status": "waiting_for_partner"}
            )
        else:
            await server.push_view(dyad, session.role)
        try:
            while True:
                message = await websocket.receive_json()
                await server.handle_event(token, message)
        except WebSocketDisconnect:
            pass
        except json.JSONDecodeError:
            await websocket.close()
        finally:
            if session.socket is websocket:
                session.socket = None

    return app
