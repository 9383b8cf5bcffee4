"""Runtime registry: how to compile and run a program in each language.

Command templates are lists of argv tokens. Placeholders:

    {build}   absolute path of the build directory (holds the source file)
    {src}     absolute path of the entry source file
    {exe}     absolute path of the compiled executable
    {workdir} absolute path of the per-run working directory (run only)
"""

from __future__ import annotations

import os
import shutil
import subprocess
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import yaml

from transpile_harness.core import LanguageId


@dataclass(frozen=True)
class RuntimeSpec:
    language: LanguageId
    compile_steps: tuple[tuple[str, ...], ...]
    run_command: tuple[str, ...]
    toolchain_version: str
    entry_file_name: str
    version_probe_command: tuple[str, ...]
    expected_version_substring: str
    # extra files written next to the entry file (name -> content)
    workdir_layout: Mapping[str, str] = field(default_factory=dict)
    allowed_packages: tuple[str, ...] = ()
    env: Mapping[str, str] = field(default_factory=dict)
    # RLIMIT_AS breaks runtimes that reserve large virtual ranges up front
    # (JVM, V8, Go, GHC, CoreCLR); those rely on RSS polling instead.
    address_space_limit: bool = True

    @property
    def compiled(self) -> bool:
        return bool(self.compile_steps)

    def toolchain_binaries(self) -> list[str]:
        argv0s = [step[0] for step in self.compile_steps]
        if not self.compiled:
            argv0s.append(self.run_command[0])
        return [a for a in dict.fromkeys(argv0s) if "{" not in a]


_CSPROJ = """<Project Sdk="Microsoft.NET.Sdk">
  <PropertyGroup>
    <OutputType>Exe</OutputType>
    <TargetFramework>net9.0</TargetFramework>
    <Nullable>disable</Nullable>
    <ImplicitUsings>enable</ImplicitUsings>
    <AssemblyName>Main</AssemblyName>
  </PropertyGroup>
</Project>
"""


def _spec(language, compile_steps, run_command, version, entry, probe, expected, **kw) -> RuntimeSpec:
    return RuntimeSpec(
        language=language,
        compile_steps=tuple(tuple(s) for s in compile_steps),
        run_command=tuple(run_command),
        toolchain_version=version,
        entry_file_name=entry,
        version_probe_command=tuple(probe),
        expected_version_substring=expected,
        **kw,
    )


def default_runtimes() -> dict[LanguageId, RuntimeSpec]:
    L = LanguageId
    specs = [
        _spec(
            L.PYTHON, [], ["python3", "{src}"],
            "Python 3.8 with the standard library", "main.py",
            ["python3", "--version"], "Python 3.8",
            allowed_packages=("numpy==1.24.4", "pandas==2.0.3"),
        ),
        _spec(
            L.CPP,
            [["g++", "-std=c++17", "-O2", "-o", "{exe}", "{src}"]],
            ["{exe}"],
            "GCC 9.4.0 (g++) with C++17", "main.cpp",
            ["g++", "--version"], "9.4.0",
            allowed_packages=("jsoncpp",),
        ),
        _spec(
            L.CSHARP,
            [["dotnet", "build", "-c", "Release", "-o", "{build}/out", "--nologo", "-v", "q", "{build}/Main.csproj"]],
            ["dotnet", "{build}/out/Main.dll"],
            ".NET 9 SDK (9.0.203)", "Program.cs",
            ["dotnet", "--version"], "9.0.203",
            workdir_layout={"Main.csproj": _CSPROJ},
            env={"DOTNET_CLI_TELEMETRY_OPTOUT": "1", "DOTNET_NOLOGO": "1"},
            address_space_limit=False,
        ),
        _spec(
            L.JAVA,
            [["javac", "-d", "{build}", "{src}"]],
            ["java", "-cp", "{build}", "Main"],
            "OpenJDK 17.0.15", "Main.java",
            ["java", "-version"], "17.0.15",
            allowed_packages=("jackson-databind",),
            address_space_limit=False,
        ),
        _spec(
            L.JAVASCRIPT, [], ["node", "{src}"],
            "Node.js v22.18.0", "main.js",
            ["node", "--version"], "v22.18.0",
            address_space_limit=False,
        ),
        _spec(
            L.GO,
            [["go", "build", "-o", "{exe}", "{src}"]],
            ["{exe}"],
            "go1.24.4 linux/amd64", "main.go",
            ["go", "version"], "go1.24.4",
            env={"GO111MODULE": "off", "GOCACHE": "{build}/.gocache"},
            address_space_limit=False,
        ),
        _spec(
            L.PERL, [], ["perl", "{src}"],
            "Perl 5.30.0", "main.pl",
            ["perl", "-e", "print $^V"], "v5.30.0",
            allowed_packages=("JSON",),
        ),
        _spec(
            L.RUBY, [], ["ruby", "{src}"],
            "Ruby 3.2.2 x86_64-linux", "main.rb",
            ["ruby", "--version"], "ruby 3.2.2",
        ),
        _spec(
            L.RUST,
            [["rustc", "-O", "--edition", "2021", "-o", "{exe}", "{src}"]],
            ["{exe}"],
            "rustc 1.75.0", "main.rs",
            ["rustc", "--version"], "rustc 1.75.0",
            allowed_packages=("serde_json",),
        ),
        _spec(
            L.HASKELL,
            [["ghc", "-O0", "-outputdir", "{build}/obj", "-o", "{exe}", "{src}"]],
            ["{exe}"],
            "GHC 8.6.5", "Main.hs",
            ["ghc", "--numeric-version"], "8.6.5",
            allowed_packages=("aeson",),
            address_space_limit=False,
        ),
    ]
    return {s.language: s for s in specs}


def load_registry(path: str | os.PathLike | None = None) -> dict[LanguageId, RuntimeSpec]:
    """Default registry, with per-language overrides from a YAML/JSON file.

    Override entries may set any of: compile_steps, run_command,
    version_probe_command, expected_version_substring, toolchain_version,
    entry_file_name, env, address_space_limit.
    """
    registry = default_runtimes()
    if path is None:
        return registry
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, Mapping):
        raise ValueError(f"{path}: runtime registry must be a mapping of language -> settings")
    for key, overrides in data.items():
        lang = LanguageId.parse(key)
        registry[lang] = apply_overrides(registry[lang], overrides, where=f"{path}:{key}")
    return registry


_LIST_FIELDS = {"run_command", "version_probe_command", "allowed_packages"}
_SCALAR_FIELDS = {"toolchain_version", "entry_file_name", "expected_version_substring"}


def apply_overrides(spec: RuntimeSpec, overrides: Mapping[str, Any], where: str = "") -> RuntimeSpec:
    if not isinstance(overrides, Mapping):
        raise ValueError(f"{where}: expected a mapping")
    changes: dict[str, Any] = {}
    for name, value in overrides.items():
        if name == "compile_steps":
            changes[name] = tuple(tuple(str(t) for t in step) for step in value)
        elif name in _LIST_FIELDS:
            changes[name] = tuple(str(t) for t in value)
        elif name in _SCALAR_FIELDS:
            changes[name] = str(value)
        elif name in ("env", "workdir_layout"):
            changes[name] = {str(k): str(v) for k, v in value.items()}
        elif name == "address_space_limit":
            changes[name] = bool(value)
        else:
            raise ValueError(f"{where}: unknown runtime field {name!r}")
    return replace(spec, **changes)


@dataclass(frozen=True)
class ProbeResult:
    language: LanguageId
    available: bool
    version_output: str
    matches_expected: bool
    message: str = ""


def probe(spec: RuntimeSpec, timeout: float = 30.0) -> ProbeResult:
    missing = [b for b in spec.toolchain_binaries() if shutil.which(b) is None]
    if missing:
        return ProbeResult(
            spec.language, False, "", False,
            f"toolchain binary not found on PATH: {', '.join(missing)}",
        )
    try:
        proc = subprocess.run(
            list(spec.version_probe_command),
            capture_output=True, text=True, timeout=timeout,
        )
    except (OSError, subprocess.TimeoutExpired) as exc:
        return ProbeResult(spec.language, False, "", False, f"version probe failed: {exc}")
    text = (proc.stdout + proc.stderr).strip()
    first = text.splitlines()[0] if text else ""
    return ProbeResult(
        spec.language,
        proc.returncode == 0,
        first,
        spec.expected_version_substring in text,
    )


def probe_all(registry: Mapping[LanguageId, RuntimeSpec], languages: Sequence[LanguageId] | None = None) -> list[ProbeResult]:
    langs = list(languages) if languages is not None else list(registry)
    return [probe(registry[lang]) for lang in langs]
