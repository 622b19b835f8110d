#!/usr/bin/env python3
"""
Plotting - Figures for charge sweeps and realized train speeds
"""

import logging
from pathlib import Path
from typing import Sequence

import matplotlib as mpl
mpl.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from results_store import ResultsStore

logger = logging.getLogger(__name__)

FIGSIZE = (7.0, 4.3)


def plot_sweep(curve: pd.DataFrame, store: ResultsStore, name: str = 'sweep.png') -> Path:
    """Revenue, externality and Z against the proportional charge p"""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    try:
        ax.plot(curve['p'], curve['revenue_eur'], label='TAC revenue')
        ax.plot(curve['p'], curve['externality_eur'], label='Externality cost')
        ax.plot(curve['p'], curve['Z_eur'], label='Z', linewidth=2)
        best = int(np.argmax(curve['Z_eur'].to_numpy()))
        ax.axvline(curve['p'].iloc[best], color='grey', linestyle=':', linewidth=1)
        ax.set_xlabel('p (fraction of operating cost)')
        ax.set_ylabel('EUR')
        ax.legend(frameon=False)
        fig.tight_layout()
        return store.write_figure(name, fig)
    finally:
        plt.close(fig)


def plot_speed_profile(speeds: Sequence[float], store: ResultsStore, reference_kmh: float = 53.0,
                       name: str = 'speed_profile.png') -> Path:
    """Histogram of realized path speeds ℓ_r/τ_r"""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    try:
        if len(speeds):
            ax.hist(speeds, bins=min(30, max(5, len(speeds) // 5)), color='tab:blue', alpha=0.8)
        ax.axvline(reference_kmh, color='tab:red', linestyle='--', label=f'reference {reference_kmh:g} km/h')
        ax.set_xlabel('speed (km/h)')
        ax.set_ylabel('trains')
        ax.legend(frameon=False)
        fig.tight_layout()
        return store.write_figure(name, fig)
    finally:
        plt.close(fig)
