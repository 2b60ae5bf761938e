"""External-solver process management over SMT-LIB2 standard streams.

The toolkit never links a solver library: a session owns one child process
addressed by path, writes SMT-LIB2 text to its stdin, and parses check-sat
answers and models from its stdout. Responses are synchronized with echo
nonces so stray diagnostics cannot desynchronize the protocol.

Solver resolution order: explicit command, the POPVERIF_SOLVER environment
variable, a `z3` binary on PATH, then the bundled Node.js shim around the
Z3 WebAssembly build.
"""

from __future__ import annotations

import os
import queue
import shlex
import shutil
import subprocess
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Optional, Sequence

from ..errors import MalformedModel, SolverCrashed, SolverNotFound
from .ast import Formula, Value, evaluate
from .emit import VarDecl, assertion_lines, declaration_lines

ENV_SOLVER = "POPVERIF_SOLVER"

_session_counter = threading.local()


def _shim_command() -> Optional[tuple[str, ...]]:
    node = shutil.which("node")
    if node is None:
        return None
    shim = Path(__file__).resolve().parent / "z3shim.js"
    if not shim.exists():
        return None
    return (node, str(shim))


@dataclass(frozen=True)
class SolverConfig:
    """How to start and drive one solver process."""

    command: tuple[str, ...]
    timeout: Optional[float] = None
    dump_dir: Optional[str] = None
    incremental: bool = True

    @staticmethod
    def resolve(command: Optional[Sequence[str]] = None,
                timeout: Optional[float] = None,
                dump_dir: Optional[str] = None,
                incremental: bool = True) -> "SolverConfig":
        if command:
            cmd = tuple(command)
        elif os.environ.get(ENV_SOLVER):
            cmd = tuple(shlex.split(os.environ[ENV_SOLVER]))
        else:
            z3 = shutil.which("z3")
            if z3 is not None:
                cmd = (z3, "-in")
            else:
                shim = _shim_command()
                if shim is None:
                    raise SolverNotFound(
                        "no SMT solver found: pass --solver, set "
                        f"{ENV_SOLVER}, put z3 on PATH, or install the bundled "
                        "shim (`npm install` in the repository root, needs node)")
                cmd = shim
        return SolverConfig(cmd, timeout=timeout, dump_dir=dump_dir, incremental=incremental)


@dataclass
class SolverStats:
    checks: int = 0
    sat: int = 0
    unsat: int = 0
    unknown: int = 0
    solve_seconds: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {"checks": self.checks, "sat": self.sat, "unsat": self.unsat,
                "unknown": self.unknown, "solve_seconds": round(self.solve_seconds, 3)}


class _Reader(threading.Thread):
    """Pumps solver stdout lines into a queue so reads can time out."""

    def __init__(self, stream) -> None:
        super().__init__(daemon=True)
        self.stream = stream
        self.lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self.start()

    def run(self) -> None:
        try:
            for line in self.stream:
                self.lines.put(line.rstrip("\n"))
        finally:
            self.lines.put(None)


class SolverSession:
    """One solver process with incremental assert/push/pop and model reads."""

    def __init__(self, config: SolverConfig, logic: str = "QF_LIA",
                 name: str = "session") -> None:
        self.config = config
        self.logic = logic
        self.stats = SolverStats()
        self._nonce = 0
        self._decl_stack: list[dict[str, VarDecl]] = [{}]
        self._assert_stack: list[list[Formula]] = [[]]
        self._dump = None
        if config.dump_dir:
            dump_dir = Path(config.dump_dir)
            dump_dir.mkdir(parents=True, exist_ok=True)
            counter = getattr(_session_counter, "n", 0)
            _session_counter.n = counter + 1
            self._dump = open(dump_dir / f"{name}-{os.getpid()}-{counter}.smt2",
                              "w", encoding="utf-8")
        try:
            self.proc = subprocess.Popen(
                list(config.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
            )
        except OSError as exc:
            raise SolverNotFound(f"cannot start solver {config.command}: {exc}") from exc
        self._reader = _Reader(self.proc.stdout)
        self._write(f"(set-logic {logic})")

    # -- plumbing ------------------------------------------------------------

    @property
    def alive(self) -> bool:
        return self.proc.poll() is None

    def _write(self, text: str) -> None:
        if self._dump is not None:
            self._dump.write(text + "\n")
            self._dump.flush()
        if not self.alive:
            raise SolverCrashed("solver process is gone", self._stderr_tail())
        try:
            self.proc.stdin.write(text + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SolverCrashed(f"solver pipe closed: {exc}", self._stderr_tail()) from exc

    def _stderr_tail(self) -> str:
        try:
            if self.proc.poll() is not None and self.proc.stderr is not None:
                return self.proc.stderr.read() or ""
        except Exception:
            pass
        return ""

    def _read_until_nonce(self, deadline: Optional[float]) -> Optional[list[str]]:
        self._nonce += 1
        marker = f"POPVERIF-SYNC-{self._nonce}"
        self._write(f'(echo "{marker}")')
        lines: list[str] = []
        while True:
            remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
            try:
                line = self._reader.lines.get(timeout=remaining)
            except queue.Empty:
                return None
            if line is None:
                raise SolverCrashed("solver exited mid-response", self._stderr_tail())
            if line.strip() == marker:
                return lines
            lines.append(line)

    # -- declarations and assertions ------------------------------------------

    def declare(self, name: str, sort: str, nonneg: bool = False) -> None:
        decl = VarDecl(name, sort, nonneg)
        self._decl_stack[-1][name] = decl
        for line in declaration_lines([decl]):
            self._write(line)

    def declare_all(self, decls: Sequence[VarDecl]) -> None:
        for d in sorted(decls, key=lambda d: d.name):
            self._decl_stack[-1][d.name] = d
        for line in declaration_lines(decls):
            self._write(line)

    def add(self, formula: Formula) -> None:
        self._assert_stack[-1].append(formula)
        for line in assertion_lines([formula], self._integer_mode()):
            self._write(line)

    def _integer_mode(self) -> bool:
        return all(d.sort == "Int" for frame in self._decl_stack for d in frame.values())

    def push(self) -> None:
        self._decl_stack.append({})
        self._assert_stack.append([])
        self._write("(push 1)")

    def pop(self) -> None:
        self._decl_stack.pop()
        self._assert_stack.pop()
        self._write("(pop 1)")

    @contextmanager
    def scope(self) -> Iterator[None]:
        self.push()
        try:
            yield
        finally:
            if self.alive:
                self.pop()

    # -- solving ---------------------------------------------------------------

    def check_sat(self, timeout: Optional[float] = None) -> str:
        """Returns "sat", "unsat" or "unknown" (also used for timeouts)."""
        budget = timeout if timeout is not None else self.config.timeout
        deadline = None if budget is None else time.monotonic() + budget
        started = time.monotonic()
        self._write("(check-sat)")
        lines = self._read_until_nonce(deadline)
        self.stats.checks += 1
        self.stats.solve_seconds += time.monotonic() - started
        if lines is None:
            self.kill()
            self.stats.unknown += 1
            return "unknown"
        answer = ""
        for line in lines:
            stripped = line.strip()
            if stripped in ("sat", "unsat", "unknown"):
                answer = stripped
            elif stripped.startswith("(error"):
                raise SolverCrashed(f"solver error: {stripped}", self._stderr_tail())
        if answer not in ("sat", "unsat", "unknown"):
            raise SolverCrashed(f"unparseable check-sat response: {lines!r}",
                                self._stderr_tail())
        setattr(self.stats, answer, getattr(self.stats, answer) + 1)
        return answer

    def get_model(self, names: Optional[Sequence[str]] = None,
                  validate: bool = True) -> dict[str, Value]:
        """Parse (get-model); absent variables default to 0.

        With `validate`, the model is re-evaluated against every assertion
        currently on the stack, exactly; a lying solver raises MalformedModel.
        """
        self._write("(get-model)")
        lines = self._read_until_nonce(None)
        if lines is None:  # pragma: no cover - nonce reads have no deadline
            raise SolverCrashed("no response to get-model", self._stderr_tail())
        text = "\n".join(lines)
        if "(error" in text:
            raise MalformedModel(f"get-model failed: {text}")
        values = _parse_model(text)
        model: dict[str, Value] = {}
        wanted = list(names) if names is not None else [
            n for frame in self._decl_stack for n in frame]
        for n in wanted:
            model[n] = values.get(n, 0)
        if validate:
            self.validate_model(model)
        return model

    def validate_model(self, model: dict[str, Value]) -> None:
        for frame_decls, frame_asserts in zip(self._decl_stack, self._assert_stack):
            for name, decl in frame_decls.items():
                v = model.get(name, 0)
                if decl.nonneg and v < 0:
                    raise MalformedModel(f"{name} = {v} violates nonnegativity")
                if decl.sort == "Int" and Fraction(v).denominator != 1:
                    raise MalformedModel(f"{name} = {v} is not an integer")
            for f in frame_asserts:
                if not evaluate(f, model):
                    raise MalformedModel("model does not satisfy an asserted formula")

    def interrupt_safe_assertions(self) -> list[Formula]:
        return [f for frame in self._assert_stack for f in frame]

    def kill(self) -> None:
        try:
            self.proc.kill()
        except Exception:
            pass

    def close(self) -> None:
        if self.alive:
            try:
                self._write("(exit)")
            except SolverCrashed:
                pass
            try:
                self.proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self.kill()
        if self._dump is not None:
            self._dump.close()
            self._dump = None

    def __enter__(self) -> "SolverSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self) -> None:  # best effort; sessions should be closed explicitly
        try:
            if self.proc.poll() is None:
                self.proc.kill()
        except Exception:
            pass


@dataclass(frozen=True)
class SolveResult:
    kind: str  # "sat" | "unsat" | "unknown"
    model: Optional[dict[str, Value]] = None
    stats: Optional[SolverStats] = field(default=None, compare=False)


def solve(decls: Sequence[VarDecl], formulas: Sequence[Formula],
          timeout: Optional[float] = None,
          config: Optional[SolverConfig] = None,
          logic: Optional[str] = None) -> SolveResult:
    """One-shot satisfiability check with validated model extraction."""
    cfg = config or SolverConfig.resolve()
    if logic is None:
        logic = "QF_LIA" if all(d.sort == "Int" for d in decls) else "QF_LRA"
    with SolverSession(cfg, logic=logic, name="solve") as session:
        session.declare_all(list(decls))
        for f in formulas:
            session.add(f)
        answer = session.check_sat(timeout)
        if answer != "sat":
            return SolveResult(answer, stats=session.stats)
        model = session.get_model([d.name for d in decls])
        return SolveResult("sat", model, session.stats)


# -- model text parsing --------------------------------------------------------

def _tokenize(text: str) -> list[str]:
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in "()":
            out.append(c)
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c.isspace():
            i += 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            out.append(text[i:j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _parse_sexp(tokens: list[str], pos: int) -> tuple[object, int]:
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while tokens[pos] != ")":
            node, pos = _parse_sexp(tokens, pos)
            items.append(node)
        return items, pos + 1
    return tok, pos + 1


def _sexp_value(node: object) -> Value:
    if isinstance(node, str):
        if "." in node:
            return Fraction(node)
        return int(node)
    assert isinstance(node, list)
    if node and node[0] == "-":
        return -_sexp_value(node[1])
    if node and node[0] == "/":
        return Fraction(_sexp_value(node[1]), _sexp_value(node[2]))
    raise MalformedModel(f"unrecognized model value {node!r}")


def _parse_model(text: str) -> dict[str, Value]:
    tokens = _tokenize(text)
    if not tokens:
        raise MalformedModel("empty get-model response")
    node, _ = _parse_sexp(tokens, 0)
    if not isinstance(node, list):
        raise MalformedModel(f"unexpected get-model response {text!r}")
    entries = node[1:] if node and node[0] == "model" else node
    values: dict[str, Value] = {}
    for entry in entries:
        if (isinstance(entry, list) and len(entry) >= 5 and entry[0] == "define-fun"
                and entry[2] == []):
            name = entry[1]
            values[str(name)] = _sexp_value(entry[4])
    return values
