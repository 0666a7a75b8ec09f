import subprocess
import sys


def develop():
    """Install the development requirements and the pre-commit hooks"""
    subprocess.run(
        [sys.executable, "-m", "pip", "install", "-r", ".requirements/dev.txt"], check=True
    )
    subprocess.run(["pre-commit", "install"], check=True)
