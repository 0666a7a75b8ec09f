import subprocess
import sys


def doc(clean: bool = False):
    """Build the HTML manual into doc/_build/html

    :param clean: rebuild every page instead of only the changed ones
    """
    command = [sys.executable, "-m", "sphinx", "-b", "html", "doc", "doc/_build/html"]
    if clean:
        command.insert(-2, "-E")
    try:
        subprocess.run(command, check=True)
    except subprocess.CalledProcessError:
        sys.exit(1)
