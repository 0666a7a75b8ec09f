import subprocess
import sys


def test(*pytest_args):
    """Run the test suite; extra arguments are passed on to pytest"""
    print("Running the heatlab test suite...")

    command = ["python", "-m", "pytest", "-s", "heatlab/tests", *pytest_args]
    try:
        subprocess.run(command, check=True)
    except subprocess.CalledProcessError:
        sys.exit(1)
