import subprocess
import sys

from launcher.commands.develop import develop

PACKAGES = ["heatlab", "launcher", "tools"]


def lint(fix=False):
    """Lint the code base

    :param fix: run the pre-commit hooks, which reformat files in place,
        instead of only reporting
    """
    if fix:
        try:
            import pre_commit  # noqa: F401
        except ImportError:
            develop()
        commands = [["pre-commit", "run", "--all-files"]]
    else:
        commands = [["flake8", *PACKAGES], ["black", "--check", *PACKAGES]]

    failed = False
    for command in commands:
        try:
            subprocess.run(command, check=True)
        except subprocess.CalledProcessError:
            failed = True
    if failed:
        sys.exit(1)
