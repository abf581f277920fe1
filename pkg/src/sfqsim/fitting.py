"""Shared nonlinear least-squares machinery for the fit operations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares


class FitError(RuntimeError):
    """Raised when a fit fails to converge or the data are degenerate."""


@dataclass(frozen=True)
class FitResult:
    """Parameter estimates with standard errors and residual diagnostics."""

    params: dict
    stderr: dict
    residual_norm: float
    n_points: int
    n_free: int
    success: bool
    message: str
    covariance: np.ndarray | None = field(default=None, repr=False)

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    def report(self) -> str:
        lines = ["parameter            estimate              stderr"]
        for name in self.params:
            err = self.stderr.get(name, float("nan"))
            lines.append(f"{name:<18s} {self.params[name]:<20.12g}  {err:<.6g}")
        lines.append(f"residual_norm      {self.residual_norm:.12g}")
        lines.append(f"n_points           {self.n_points}")
        lines.append(f"converged          {self.success} ({self.message})")
        if self.covariance is not None:
            free = [n for n in self.params if self.stderr.get(n, 0.0) != 0.0]
            names = free if len(free) == self.covariance.shape[0] else list(self.params)
            lines.append("covariance (free parameters, row order as listed):")
            for i, name in enumerate(names[: self.covariance.shape[0]]):
                row = "  ".join(f"{v: .6e}" for v in self.covariance[i])
                lines.append(f"  {name:<16s} {row}")
        return "\n".join(lines) + "\n"


def solve_least_squares(
    residual_fn,
    x0,
    bounds,
    param_names,
    *,
    max_nfev: int = 2000,
    x_scale=None,
) -> FitResult:
    """Bounded damped least squares with Jacobian-based standard errors.

    Raises FitError on non-convergence.  Standard errors come from the
    Gauss-Newton covariance ``inv(J^T J) * 2 cost/(N - k)``; when the Jacobian
    is singular the affected errors are reported as inf rather than hidden.
    """
    x0 = np.asarray(x0, dtype=float)
    kwargs = {"bounds": bounds, "max_nfev": max_nfev, "method": "trf"}
    if x_scale is not None:
        kwargs["x_scale"] = x_scale
    sol = least_squares(residual_fn, x0, **kwargs)
    if not sol.success:
        raise FitError(
            f"least-squares did not converge: {sol.message} "
            f"(status {sol.status}, nfev {sol.nfev}, cost {sol.cost:.6g})"
        )
    n_points = sol.fun.size
    n_free = x0.size
    dof = max(n_points - n_free, 1)
    s_sq = 2.0 * sol.cost / dof
    jtj = sol.jac.T @ sol.jac
    try:
        cov = np.linalg.inv(jtj) * s_sq
        errs = np.sqrt(np.clip(np.diagonal(cov), 0.0, None))
    except np.linalg.LinAlgError:
        cov = None
        errs = np.full(n_free, np.inf)
    return FitResult(
        params=dict(zip(param_names, (float(v) for v in sol.x))),
        stderr=dict(zip(param_names, (float(e) for e in errs))),
        residual_norm=float(np.linalg.norm(sol.fun)),
        n_points=int(n_points),
        n_free=int(n_free),
        success=bool(sol.success),
        message=str(sol.message),
        covariance=cov,
    )
