"""Figure rendering for experiment result tables.

The CSV table is the canonical output; figures are a convenience view
rendered next to it.  Uses the Agg backend so no display is required.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import InvalidInputError
from .experiments import ResultTable


def render_figure(table: ResultTable, path) -> None:
    """Render the preset-appropriate figure for a result table to a file."""
    preset = table.meta.get("preset")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if preset == "y-sweep":
            ax.loglog(table.column("target_y_m") / 1e3, table.column("rmse_nls_m"),
                      "o-", label="NLS RMSE")
            ax.loglog(table.column("target_y_m") / 1e3,
                      table.column("crlb_position_m"), "k--", label="CRLB (position)")
            ax.set_xlabel("target y [km]")
            ax.set_ylabel("RMSE [m]")
        elif preset == "x-sweep":
            ax.semilogy(table.column("target_x_m") / 1e3, table.column("rmse_nls_m"),
                        "o-", label="NLS RMSE")
            ax.semilogy(table.column("target_x_m") / 1e3,
                        table.column("crlb_position_m"), "k--",
                        label="CRLB (position)")
            ax.set_xlabel("target x [km]")
            ax.set_ylabel("RMSE [m]")
        elif preset == "estimator-comparison":
            sigma_deg = np.rad2deg(table.column("sigma_rad"))
            for name, style in (("nls", "o-"), ("ov", "s-"), ("tls", "^-")):
                ax.loglog(sigma_deg, table.column(f"rmse_{name}_m"), style,
                          label=name.upper())
            ax.loglog(sigma_deg, table.column("crlb_position_m"), "k--",
                      label="CRLB (position)")
            ax.set_xlabel("bearing noise std [deg]")
            ax.set_ylabel("RMSE [m]")
        elif preset in ("orientation-bearing", "orientation-polarization"):
            deg = table.column("orientation_deg")
            ax.semilogy(deg, table.column("rmse_m"), "o-", label="RMSE [m]")
            ax2 = ax.twinx()
            ax2.plot(deg, 100 * table.column("clustering_error"), "r^--",
                     label="clustering error [%]")
            ax2.set_ylabel("clustering error [%]")
            ax.set_xlabel("target pair orientation [deg]")
            ax.set_ylabel("RMSE [m]")
        elif preset == "noise-sweep":
            sigma_deg = np.rad2deg(table.column("sigma_rad"))
            ax.semilogx(sigma_deg, 100 * table.column("cluster_err_bearing"),
                        "o-", label="bearing clustering")
            ax.semilogx(sigma_deg, 100 * table.column("cluster_err_polarization"),
                        "s-", label="polarization clustering")
            ax.set_xlabel("bearing noise std [deg]")
            ax.set_ylabel("clustering error [%]")
        else:
            raise InvalidInputError(f"no figure defined for preset {preset!r}")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(loc="best")
        ax.set_title(preset)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
    finally:
        plt.close(fig)
