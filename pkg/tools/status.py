from contextlib import contextmanager
import io
import sys


@contextmanager
def redirect_std(out):
    """
    Contextmanager to temporarily redirect stdout to a StringIO object.

    """
    sys.stdout.flush()
    stdout = sys.stdout
    try:
        sys.stdout = out
        yield
    finally:
        sys.stdout = stdout


@contextmanager
def status(message):
    """
    Print `[·] message`, then `[✓]` or `[✗]` once the block is done.

    Output of the block is swallowed, and replayed only if it fails, so that
    progress lines stay on one row each. Log records go to stderr and are
    not affected.
    """
    print(f"[·] {message}", end="", flush=True)

    fake_stdout = io.StringIO()

    try:
        with redirect_std(fake_stdout):
            yield
    except BaseException:
        print(f"\r[✗] {message}")

        out = fake_stdout.getvalue().strip()
        if out:
            print("-- captured output --")
            print(out)
            print("-- end output --")

        raise
    else:
        print(f"\r[✓] {message}")
