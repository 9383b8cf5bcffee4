"""Process-level execution of programs under resource limits.

Threat model: curated code at desk scale. Each run gets a fresh process
group, a private temporary working directory, a scrubbed environment and
rlimit-style caps. There is no network or filesystem isolation beyond that;
run untrusted code inside a container or VM.
"""

from __future__ import annotations

import enum
import itertools
import logging
import os
import re
import resource
import shutil
import signal
import subprocess
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence, TypeVar

import psutil

from transpile_harness.core import LanguageId, SourceProgram, TestCase
from transpile_harness.sandbox.compare import ComparisonPolicy, outputs_match
from transpile_harness.sandbox.runtimes import RuntimeSpec, default_runtimes

log = logging.getLogger(__name__)

MiB = 1024 * 1024

# environment variables a toolchain may legitimately need; everything else
# (API keys in particular) is withheld from child processes
_ENV_PASSTHROUGH = (
    "PATH", "LANG", "LC_ALL", "TZ", "LD_LIBRARY_PATH",
    "RUSTUP_HOME", "CARGO_HOME", "JAVA_HOME", "DOTNET_ROOT",
    "GOROOT", "GOPATH", "GHC_PACKAGE_PATH", "PERL5LIB", "GEM_HOME", "GEM_PATH",
    "NODE_PATH", "PYTHONPATH", "CLASSPATH",
)

WORKDIR_ENV_VAR = "SANDBOX_WORKDIR"


class SandboxError(RuntimeError):
    """The harness itself could not stage or launch a program."""


class ExecutionStatus(str, enum.Enum):
    OK = "ok"
    COMPILE_ERROR = "compile_error"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"
    OUTPUT_OVERFLOW = "output_overflow"
    SANDBOX_ERROR = "sandbox_error"


@dataclass(frozen=True)
class ExecutionLimits:
    wall_clock_timeout: float = 10.0
    memory_cap: int = 512 * MiB
    max_output_bytes: int = 8 * MiB
    cpu_affinity: int | None = None
    compile_timeout: float = 120.0

    def __post_init__(self) -> None:
        for name in ("wall_clock_timeout", "memory_cap", "max_output_bytes", "compile_timeout"):
            if not getattr(self, name) > 0:
                raise ValueError(f"execution limit {name} must be strictly positive")
        if self.cpu_affinity is not None and self.cpu_affinity < 0:
            raise ValueError("cpu_affinity must be a non-negative cpu index")


@dataclass(frozen=True)
class ExecutionReport:
    status: ExecutionStatus
    stdout: bytes = b""
    stderr: bytes = b""
    exit_code: int | None = None
    wall_time: float = 0.0
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "stdout": self.stdout.decode("utf-8", errors="replace"),
            "stderr": self.stderr.decode("utf-8", errors="replace"),
            "exit_code": self.exit_code,
            "wall_time": round(self.wall_time, 6),
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExecutionReport":
        return cls(
            status=ExecutionStatus(data["status"]),
            stdout=data.get("stdout", "").encode("utf-8"),
            stderr=data.get("stderr", "").encode("utf-8"),
            exit_code=data.get("exit_code"),
            wall_time=float(data.get("wall_time", 0.0)),
            note=data.get("note", ""),
        )


@dataclass
class BuildHandle:
    """A staged (and, for compiled languages, compiled) program."""

    spec: RuntimeSpec
    build_dir: str
    task_id: str
    candidate_index: int
    _runs: Iterable[int] = field(default_factory=itertools.count, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def language(self) -> LanguageId:
        return self.spec.language

    @property
    def src(self) -> str:
        return os.path.join(self.build_dir, self.spec.entry_file_name)

    @property
    def exe(self) -> str:
        return os.path.join(self.build_dir, "main.bin")

    def next_run_index(self) -> int:
        with self._lock:
            return next(self._runs)

    def close(self) -> None:
        shutil.rmtree(self.build_dir, ignore_errors=True)

    def __enter__(self) -> "BuildHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.keep


KEEP = FilterDecision(True)


@dataclass
class _RawResult:
    returncode: int | None
    stdout: bytes
    stderr: bytes
    wall_time: float
    timed_out: bool = False
    overflowed: bool = False
    memory_exceeded: bool = False


def _safe_component(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", str(text))[:60] or "task"


def _kill_group(pgid: int) -> None:
    try:
        os.killpg(pgid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


def _tree_rss(proc: psutil.Process) -> int:
    total = 0
    try:
        procs = [proc] + proc.children(recursive=True)
    except psutil.Error:
        return 0
    for p in procs:
        try:
            total += p.memory_info().rss
        except psutil.Error:
            pass
    return total


def _reader(stream, sink: bytearray, cap: int, overflow: threading.Event) -> None:
    try:
        while True:
            chunk = stream.read1(65536) if hasattr(stream, "read1") else stream.read(65536)
            if not chunk:
                break
            room = cap + 1 - len(sink)
            if room > 0:
                sink.extend(chunk[:room])
            if len(sink) > cap:
                overflow.set()
    except (OSError, ValueError):
        pass


def _writer(stream, data: bytes) -> None:
    try:
        if data:
            stream.write(data)
    except (BrokenPipeError, OSError, ValueError):
        pass
    finally:
        try:
            stream.close()
        except OSError:
            pass


def execute(
    argv: Sequence[str],
    stdin: bytes,
    cwd: str,
    env: Mapping[str, str],
    timeout: float,
    max_output: int,
    memory_cap: int | None = None,
    address_space_limit: bool = False,
    cpu_affinity: int | None = None,
) -> _RawResult:
    """Run one process group to completion, enforcing every limit."""

    def preexec() -> None:
        resource.setrlimit(resource.RLIMIT_CORE, (0, 0))
        if memory_cap and address_space_limit:
            resource.setrlimit(resource.RLIMIT_AS, (memory_cap, memory_cap))
        if cpu_affinity is not None:
            os.sched_setaffinity(0, {cpu_affinity})

    start = time.monotonic()
    proc = subprocess.Popen(
        list(argv),
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        cwd=cwd,
        env=dict(env),
        start_new_session=True,
        preexec_fn=preexec,
    )
    pgid = proc.pid
    out_buf, err_buf = bytearray(), bytearray()
    out_overflow, err_overflow = threading.Event(), threading.Event()
    threads = [
        threading.Thread(target=_reader, args=(proc.stdout, out_buf, max_output, out_overflow), daemon=True),
        threading.Thread(target=_reader, args=(proc.stderr, err_buf, max_output, err_overflow), daemon=True),
        threading.Thread(target=_writer, args=(proc.stdin, stdin), daemon=True),
    ]
    for t in threads:
        t.start()

    try:
        ps_proc = psutil.Process(proc.pid)
    except psutil.Error:
        ps_proc = None
    deadline = start + timeout
    timed_out = overflowed = memory_exceeded = False
    next_mem_check = start
    while True:
        try:
            proc.wait(timeout=0.01)
            break
        except subprocess.TimeoutExpired:
            pass
        now = time.monotonic()
        if out_overflow.is_set():
            overflowed = True
        elif now >= deadline:
            timed_out = True
        elif memory_cap and ps_proc is not None and now >= next_mem_check:
            next_mem_check = now + 0.05
            if _tree_rss(ps_proc) > memory_cap:
                memory_exceeded = True
        if timed_out or overflowed or memory_exceeded:
            _kill_group(pgid)
            proc.wait()
            break
    wall = time.monotonic() - start
    # sweep anything the program left behind in its group
    _kill_group(pgid)
    for t in threads:
        t.join(timeout=2.0)
    for stream in (proc.stdout, proc.stderr):
        try:
            stream.close()
        except OSError:
            pass
    if out_overflow.is_set():
        overflowed = True
    return _RawResult(
        returncode=proc.returncode,
        stdout=bytes(out_buf[:max_output]),
        stderr=bytes(err_buf[:max_output]),
        wall_time=wall,
        timed_out=timed_out,
        overflowed=overflowed,
        memory_exceeded=memory_exceeded,
    )


def _fill(template: str, **values: str) -> str:
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


T = TypeVar("T")
R = TypeVar("R")


class Sandbox:
    """Compiles and runs programs for every registered runtime.

    The registry is read-only after construction. ``map`` fans jobs out over
    a bounded thread pool; each job owns its own workspace directories.
    """

    def __init__(
        self,
        registry: Mapping[LanguageId, RuntimeSpec] | None = None,
        workspace_root: str | None = None,
        max_workers: int | None = None,
        policy: ComparisonPolicy = ComparisonPolicy.DEFAULT,
    ):
        self.registry = dict(registry if registry is not None else default_runtimes())
        root = workspace_root or os.environ.get(WORKDIR_ENV_VAR)
        self.workspace_root = root or os.path.join(tempfile.gettempdir(), "transpile-harness")
        os.makedirs(self.workspace_root, exist_ok=True)
        self.max_workers = max_workers or min(8, os.cpu_count() or 1)
        self.policy = ComparisonPolicy(policy)

    # -- staging -----------------------------------------------------------

    def runtime(self, language: LanguageId | str) -> RuntimeSpec:
        try:
            lang = LanguageId.parse(language)
        except ValueError as exc:
            raise SandboxError(f"unregistered language {language!r}") from exc
        if lang not in self.registry:
            raise SandboxError(f"unregistered language {lang.value!r}: add it to the runtime registry")
        return self.registry[lang]

    def available(self, language: LanguageId | str) -> bool:
        try:
            spec = self.runtime(language)
        except SandboxError:
            return False
        return all(shutil.which(b) for b in spec.toolchain_binaries())

    def _env(self, spec: RuntimeSpec, home: str, build_dir: str) -> dict[str, str]:
        env = {k: os.environ[k] for k in _ENV_PASSTHROUGH if k in os.environ}
        env.setdefault("PATH", "/usr/local/bin:/usr/bin:/bin")
        env.setdefault("LANG", "C.UTF-8")
        env["HOME"] = home
        env["TMPDIR"] = home
        for key, value in spec.env.items():
            env[key] = _fill(value, build=build_dir)
        return env

    def prepare(
        self,
        program: SourceProgram | str,
        language: LanguageId | str | None = None,
        limits: ExecutionLimits | None = None,
        task_id: str = "adhoc",
        candidate_index: int = 0,
    ) -> BuildHandle | ExecutionReport:
        """Stage and compile a program.

        Returns a BuildHandle, or an ExecutionReport with status
        COMPILE_ERROR. Raises SandboxError for unknown languages, missing
        toolchains or workspace failures.
        """
        if isinstance(program, SourceProgram):
            code, language = program.code, program.language
        else:
            code = program
            if language is None:
                raise SandboxError("language is required when staging raw code")
        limits = limits or ExecutionLimits()
        spec = self.runtime(language)
        missing = [b for b in spec.toolchain_binaries() if shutil.which(b) is None]
        if missing:
            raise SandboxError(
                f"{spec.language.value} toolchain not found ({', '.join(missing)}); "
                f"install {spec.toolchain_version} or point the runtime registry at it"
            )
        try:
            build_dir = tempfile.mkdtemp(
                prefix=f"{_safe_component(task_id)}__c{candidate_index}__build__",
                dir=self.workspace_root,
            )
        except OSError as exc:
            raise SandboxError(f"cannot create workspace under {self.workspace_root}: {exc}") from exc
        handle = BuildHandle(spec=spec, build_dir=build_dir, task_id=task_id, candidate_index=candidate_index)
        with open(handle.src, "w", encoding="utf-8") as fh:
            fh.write(code)
        for name, content in spec.workdir_layout.items():
            with open(os.path.join(build_dir, name), "w", encoding="utf-8") as fh:
                fh.write(content)

        start = time.monotonic()
        env = self._env(spec, build_dir, build_dir)
        for step in spec.compile_steps:
            argv = [_fill(tok, build=build_dir, src=handle.src, exe=handle.exe) for tok in step]
            try:
                raw = execute(
                    argv, b"", build_dir, env,
                    timeout=limits.compile_timeout,
                    max_output=limits.max_output_bytes,
                )
            except OSError as exc:
                handle.close()
                raise SandboxError(f"failed to launch compiler {argv[0]!r}: {exc}") from exc
            if raw.timed_out or raw.returncode != 0:
                handle.close()
                note = "compiler timed out" if raw.timed_out else "compilation failed"
                return ExecutionReport(
                    status=ExecutionStatus.COMPILE_ERROR,
                    stdout=raw.stdout,
                    stderr=raw.stderr or raw.stdout,
                    exit_code=raw.returncode,
                    wall_time=time.monotonic() - start,
                    note=note,
                )
        return handle

    # -- running -----------------------------------------------------------

    def run_one(
        self,
        handle: BuildHandle,
        test: TestCase | str | bytes,
        limits: ExecutionLimits | None = None,
    ) -> ExecutionReport:
        """Run a prepared program once on one input.

        Every failure mode is reported through the status field; nothing
        raises out of here.
        """
        limits = limits or ExecutionLimits()
        data = test.input if isinstance(test, TestCase) else test
        stdin = data.encode("utf-8") if isinstance(data, str) else bytes(data)
        run_index = handle.next_run_index()
        try:
            workdir = tempfile.mkdtemp(
                prefix=f"{_safe_component(handle.task_id)}__c{handle.candidate_index}__r{run_index}__",
                dir=self.workspace_root,
            )
        except OSError as exc:
            return ExecutionReport(ExecutionStatus.SANDBOX_ERROR, note=f"workspace: {exc}")
        spec = handle.spec
        try:
            argv = [
                _fill(tok, build=handle.build_dir, src=handle.src, exe=handle.exe, workdir=workdir)
                for tok in spec.run_command
            ]
            try:
                raw = execute(
                    argv, stdin, workdir, self._env(spec, workdir, handle.build_dir),
                    timeout=limits.wall_clock_timeout,
                    max_output=limits.max_output_bytes,
                    memory_cap=limits.memory_cap,
                    address_space_limit=spec.address_space_limit,
                    cpu_affinity=limits.cpu_affinity,
                )
            except (OSError, subprocess.SubprocessError) as exc:
                return ExecutionReport(ExecutionStatus.SANDBOX_ERROR, note=f"spawn failed: {exc}")
        finally:
            shutil.rmtree(workdir, ignore_errors=True)
        return _to_report(raw, limits)

    def run_program(
        self,
        program: SourceProgram | str,
        inputs: Sequence[TestCase | str],
        language: LanguageId | str | None = None,
        limits: ExecutionLimits | None = None,
        task_id: str = "adhoc",
    ) -> list[ExecutionReport]:
        """Prepare once and run on every input; a compile error is repeated
        for each input."""
        try:
            handle = self.prepare(program, language, limits, task_id=task_id)
        except SandboxError as exc:
            return [ExecutionReport(ExecutionStatus.SANDBOX_ERROR, note=str(exc))] * len(inputs)
        if isinstance(handle, ExecutionReport):
            return [handle] * len(inputs)
        with handle:
            return [self.run_one(handle, item, limits) for item in inputs]

    def determinism_filter(
        self,
        program: SourceProgram,
        inputs: Sequence[TestCase | str],
        limits: ExecutionLimits | None = None,
        policy: ComparisonPolicy | None = None,
    ) -> FilterDecision:
        """Run twice per input and discard on any disagreement.

        A keep only means no disagreement was observed; it does not prove
        the program deterministic.
        """
        policy = self.policy if policy is None else ComparisonPolicy(policy)
        try:
            handle = self.prepare(program, limits=limits, task_id=program.problem_id or "determinism")
        except SandboxError as exc:
            return FilterDecision(False, f"sandbox: {exc}")
        if isinstance(handle, ExecutionReport):
            return FilterDecision(False, "compile error")
        with handle:
            for i, item in enumerate(inputs):
                first = self.run_one(handle, item, limits)
                second = self.run_one(handle, item, limits)
                if ExecutionStatus.SANDBOX_ERROR in (first.status, second.status):
                    return FilterDecision(False, f"sandbox: input {i}")
                if first.status != second.status:
                    return FilterDecision(
                        False, f"status mismatch on input {i}: {first.status.value} vs {second.status.value}"
                    )
                if not outputs_match(first.stdout, second.stdout, policy):
                    return FilterDecision(False, f"output mismatch on input {i}")
        return KEEP

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """Apply ``fn`` over the worker pool; results keep input order."""
        items = list(items)
        if self.max_workers <= 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            return list(pool.map(fn, items))


def _to_report(raw: _RawResult, limits: ExecutionLimits) -> ExecutionReport:
    if raw.overflowed:
        status, note = ExecutionStatus.OUTPUT_OVERFLOW, f"stdout exceeded {limits.max_output_bytes} bytes"
    elif raw.timed_out:
        status, note = ExecutionStatus.TIMEOUT, f"wall clock limit {limits.wall_clock_timeout}s"
    elif raw.memory_exceeded:
        status, note = ExecutionStatus.RUNTIME_ERROR, f"memory cap {limits.memory_cap} bytes exceeded"
    elif raw.returncode != 0:
        status = ExecutionStatus.RUNTIME_ERROR
        note = f"killed by signal {-raw.returncode}" if raw.returncode and raw.returncode < 0 else ""
    else:
        status, note = ExecutionStatus.OK, ""
    return ExecutionReport(
        status=status,
        stdout=raw.stdout,
        stderr=raw.stderr,
        exit_code=raw.returncode,
        wall_time=raw.wall_time,
        note=note,
    )
