"""Optional bridge to an external MILP solver given as a command template."""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile

ENV_VAR = "MPSPCRP_SOLVER_CMD"


class SolverError(RuntimeError):
    pass


def default_command() -> str | None:
    return os.environ.get(ENV_VAR) or None


def run_solver(template: str, lp_path: str, start_path: str | None = None, timeout: float | None = None) -> str:
    """Run ``template`` with ``{lp}``, ``{start}`` and ``{sol}`` filled in and return the solution listing.

    When the template mentions ``{sol}`` the listing is read from that file,
    otherwise from the command's standard output.
    """
    with tempfile.TemporaryDirectory() as tmp:
        sol_path = os.path.join(tmp, "solution.txt")
        fields = {"lp": lp_path, "start": start_path or "", "sol": sol_path}
        argv = [part.format(**fields) for part in shlex.split(template)]
        if not argv:
            raise SolverError("empty solver command")
        try:
            done = subprocess.run(argv, capture_output=True, text=True, timeout=timeout, check=False)
        except FileNotFoundError:
            raise SolverError(f"solver executable {argv[0]!r} not found") from None
        except subprocess.TimeoutExpired:
            raise SolverError(f"solver exceeded {timeout} s") from None
        if done.returncode != 0:
            tail = done.stderr.strip().splitlines()[-1:] or [""]
            raise SolverError(f"solver exited with status {done.returncode}: {tail[0]}")
        if "{sol}" in template:
            try:
                with open(sol_path) as fh:
                    return fh.read()
            except FileNotFoundError:
                raise SolverError("solver wrote no solution file") from None
        return done.stdout


__all__ = ["ENV_VAR", "SolverError", "default_command", "run_solver"]
