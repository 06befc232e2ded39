"""Sandbox harness executed as the subprocess entrypoint.

Runs a target script with an audit hook restricting filesystem access:
reads are allowed under the workspace, the tool-script directory, the data
root, and the interpreter installation; writes only under the workspace.
Process spawning and sockets are blocked. This is process-level scoping,
not a container; the boundary is documented, not adversarial-grade.

Usage: python3 shim.py <script> --workspace <dir>
Config via environment: CLIMALAB_SANDBOX_WORKSPACE, CLIMALAB_SANDBOX_TOOLS,
CLIMALAB_SANDBOX_DATA. The target script sees argv = [<script>, ...rest].

This module must stay stdlib-only and import nothing from climalab: it runs
inside the sandboxed interpreter.
"""

import os
import runpy
import sys
import traceback

_BLOCKED_EVENTS = (
    "subprocess.Popen",
    "os.system",
    "os.posix_spawn",
    "os.spawn",
    "os.exec",
    "os.fork",
    "os.forkpty",
    "pty.spawn",
)

_WRITE_PATH_EVENTS = (
    "os.mkdir",
    "os.remove",
    "os.rmdir",
    "os.truncate",
    "os.link",
    "os.symlink",
    "os.chmod",
    "os.utime",
)

_DEV_OK = ("/dev/null", "/dev/urandom", "/dev/random", "/dev/zero")


def _as_str(path):
    if isinstance(path, bytes):
        try:
            return path.decode("utf-8", "replace")
        except Exception:
            return None
    if isinstance(path, str):
        return path
    return None  # fd or None: already-open handle, nothing to check


def _norm(path):
    return os.path.realpath(os.path.join(os.getcwd(), path))


def _under(path, roots):
    for root in roots:
        if path == root or path.startswith(root + os.sep):
            return True
    return False


def make_hook(workspace, tools_dir, data_root, script=""):
    write_roots = [os.path.realpath(workspace)]
    read_roots = list(write_roots)
    for extra in (tools_dir, data_root, sys.prefix, sys.base_prefix,
                  getattr(sys, "exec_prefix", None)):
        if extra:
            read_roots.append(os.path.realpath(extra))
    # the target script itself is always readable, wherever it lives
    read_files = {os.path.realpath(script)} if script else set()

    def hook(event, args):
        if event in _BLOCKED_EVENTS:
            raise PermissionError(f"sandbox: {event} is blocked")
        if event.startswith("socket."):
            raise PermissionError("sandbox: network access is blocked")
        if event == "open":
            path = _as_str(args[0])
            if path is None:
                return
            mode, flags = args[1], args[2]
            if mode is None:
                writing = bool(
                    flags
                    & (os.O_WRONLY | os.O_RDWR | os.O_APPEND | os.O_CREAT
                       | os.O_TRUNC)
                )
            else:
                writing = any(c in mode for c in "wax+")
            full = _norm(path)
            if full in _DEV_OK:
                return
            if writing:
                if not _under(full, write_roots):
                    raise PermissionError(
                        f"sandbox: write outside workspace: {path}"
                    )
            elif not _under(full, read_roots) and full not in read_files:
                raise PermissionError(f"sandbox: read not allowed: {path}")
            return
        if event in _WRITE_PATH_EVENTS or event == "os.rename":
            for arg in args:
                path = _as_str(arg)
                if path is not None and not _under(_norm(path), write_roots):
                    raise PermissionError(
                        f"sandbox: {event} outside workspace: {path}"
                    )

    return hook


def _workspace_from(argv):
    for i, arg in enumerate(argv):
        if arg == "--workspace" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--workspace="):
            return arg.split("=", 1)[1]
    return None


def main():
    if len(sys.argv) < 2:
        print("shim: missing target script", file=sys.stderr)
        return 2
    script, rest = sys.argv[1], sys.argv[2:]
    workspace = os.environ.get("CLIMALAB_SANDBOX_WORKSPACE") or _workspace_from(rest)
    if not workspace or not os.path.isdir(workspace):
        print("shim: no usable workspace", file=sys.stderr)
        return 2
    tools_dir = os.environ.get("CLIMALAB_SANDBOX_TOOLS") or ""
    data_root = os.environ.get("CLIMALAB_SANDBOX_DATA") or ""

    os.chdir(workspace)
    sys.dont_write_bytecode = True
    if tools_dir:
        sys.path.insert(0, tools_dir)
    sys.argv = [script] + rest

    sys.addaudithook(make_hook(workspace, tools_dir, data_root, script))
    try:
        runpy.run_path(script, run_name="__main__")
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    except BaseException:
        traceback.print_exc()
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
