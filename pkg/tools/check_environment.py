#!/usr/bin/env python
from importlib import metadata
import pathlib
import platform
import subprocess
import sys

from packaging.requirements import InvalidRequirement, Requirement
from packaging.version import Version

from .status import status


MIN_PYTHON = "3.9"


def get_python_requirements(
    requirements_path: pathlib.Path = pathlib.Path(__file__).parent.parent.absolute(),
    requirements_file_name: str = "requirements.txt",
):
    """Recursively get python requirements from requirements.txt-like files"""
    requirements = []
    with open(requirements_path / requirements_file_name) as requirements_file:
        lines = requirements_file.read().splitlines()
    for line in lines:
        line = line.split("#")[0].strip()
        if not line:
            continue
        if line.startswith("-r"):
            requirements += get_python_requirements(requirements_path, line.split()[1])
        else:
            requirements.append(line)
    return sorted(set(requirements))


def requirement_ok(requirement: str):
    """Raise if `requirement` is not installed in a matching version"""
    try:
        parsed = Requirement(requirement)
    except InvalidRequirement:
        raise ValueError(f"Could not parse requirement {requirement!r}")
    installed = metadata.version(parsed.name)
    if parsed.specifier and not parsed.specifier.contains(installed, prereleases=True):
        raise RuntimeError(f"Required {parsed.specifier}, found {installed}")
    return installed


def dependencies_ok(check_python_requirements: bool = True):
    print("Checking system dependencies:")

    query = f"python >= {MIN_PYTHON}"
    version = platform.python_version()
    try:
        with status(query):
            print(f"[{version.rjust(8)}]".rjust(40 - len(query)), end="")
            if Version(version) < Version(MIN_PYTHON):
                raise RuntimeError(f"Required {MIN_PYTHON}, found {version}")
    except RuntimeError as e:
        print(f"\n[!] {e}")
        return False

    unsatisfied_python_requirements = []
    if check_python_requirements:
        print("\nChecking python requirements:")

        for requirement in get_python_requirements():
            try:
                with status(requirement):
                    requirement_ok(requirement)
            except (metadata.PackageNotFoundError, RuntimeError, ValueError) as e:
                unsatisfied_python_requirements.append(f"    - {requirement}: {e}")

        if unsatisfied_python_requirements:
            print()
            print("[!] Some python package requirements seem to be unsatisfied")
            print()
            print("    The failed requirements were:")
            print()
            for requirement in unsatisfied_python_requirements:
                print(requirement)
            print()

    if unsatisfied_python_requirements:
        if not sys.stdin.isatty():
            return False
        attempt_resolving = input(
            "Would you like to attempt to resolve unsatisfied "
            "Python package requirements in your current environment? [y/N] "
        ).lower()
        if attempt_resolving not in ("y", "yes"):
            return False
        p = subprocess.run(
            [
                sys.executable,
                "-m",
                "pip",
                "install",
                "-r",
                pathlib.Path(__file__).parent.parent.absolute() / "requirements.txt",
            ]
        )
        if p.returncode != 0:
            print("\nAttempt failed.\n")
            return False

    print("-" * 20)
    return True


if __name__ == "__main__":
    dependencies_ok()
