"""Minimal code worker used by the host-side bridge tests.

Speaks the same JSON-lines protocol as the real worker: one request object
per stdin line, one response object per stdout line. Set
MINI_WORKER_IGNORE_TIMEOUT=1 to make it ignore deadlines so the host has to
kill it.
"""
import ast
import contextlib
import io
import json
import os
import signal
import sys


class Deadline(Exception):
    pass


def on_alarm(signum, frame):
    raise Deadline()


def run(code, variables):
    namespace = dict(variables)
    tree = ast.parse(code, mode="exec")
    tail = None
    if tree.body and isinstance(tree.body[-1], ast.Expr):
        tail = ast.Expression(tree.body.pop().value)
    out = io.StringIO()
    result = ""
    with contextlib.redirect_stdout(out):
        exec(compile(tree, "<code>", "exec"), namespace)
        if tail is not None:
            value = eval(compile(tail, "<code>", "eval"), namespace)
            if value is not None:
                result = str(value)
    return out.getvalue(), result


def main():
    ignore_timeout = os.environ.get("MINI_WORKER_IGNORE_TIMEOUT") == "1"
    signal.signal(signal.SIGALRM, on_alarm)
    for line in sys.stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        if req.get("code") == "__shutdown__":
            break
        resp = {"id": req["id"], "status": "ok", "stdout": "", "result": ""}
        if not ignore_timeout:
            signal.setitimer(signal.ITIMER_REAL, float(req.get("timeout_s", 10)))
        try:
            resp["stdout"], resp["result"] = run(req["code"], req.get("variables", {}))
        except Deadline:
            resp["status"] = "timeout"
            resp["error_text"] = "execution exceeded %s s" % req.get("timeout_s")
        except Exception as exc:  # reported to the agent, not raised
            resp["status"] = "error"
            resp["error_text"] = "%s: %s" % (type(exc).__name__, exc)
        finally:
            signal.setitimer(signal.ITIMER_REAL, 0)
        sys.stdout.write(json.dumps(resp) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
