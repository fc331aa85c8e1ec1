# plots/plot_functions.py

import plotly.graph_objects as go
import numpy as np
import logging

# line style per controller variant; the random controller is drawn dashed
_VARIANT_STYLE = {
    "coevolutionary": dict(color='blue'),
    "random": dict(color='gray', dash='dash'),
    "simple_memory": dict(color='orange'),
    "wh_memory": dict(color='green'),
}


def _to_html(fig, div_id):
    return fig.to_html(
        include_plotlyjs='cdn',
        full_html=True,
        div_id=div_id
    )


def generate_fitness_plot(curves, gate="AND", max_fitness=4):
    """
    Mean fitness over input presentations, one line per controller variant.
    `curves` maps a variant label to a list of (presentations, mean fitness).
    """
    try:
        logging.debug("Generating fitness plot.")
        fig = go.Figure()
        for label, curve in curves.items():
            if len(curve) == 0:
                continue
            xs, ys = zip(*curve)
            fig.add_trace(go.Scatter(
                x=list(xs),
                y=list(ys),
                mode='lines',
                name=label,
                line=_VARIANT_STYLE.get(label, {})
            ))

        fig.update_layout(
            title=f"{gate} gate: average fitness over time",
            xaxis_title="Input presentations",
            yaxis_title="Fitness",
            yaxis_range=[0, max_fitness + 0.1],
            template='plotly_white',
            height=600,
            showlegend=True
        )
        return _to_html(fig, "fitness")
    except Exception as e:
        logging.error(f"Fitness plot error: {e}")
        return "<h3>Error generating fitness plot.</h3>"


def generate_batch_plot(stats):
    """
    Average presentations to solution per variant, with std error bars.
    Bars of variants with failed runs are hatched (averages are lower bounds).
    """
    try:
        logging.debug("Generating batch summary plot.")
        fig = go.Figure()
        fig.add_trace(go.Bar(
            x=[f"{s.gate} {s.variant}" for s in stats],
            y=[s.avg for s in stats],
            error_y=dict(type='data', array=[s.std for s in stats], visible=True),
            text=[s.success_rate for s in stats],
            marker_pattern_shape=['/' if s.any_failed else '' for s in stats],
            marker_color='blue',
            name='Avg. presentations'
        ))
        fig.update_layout(
            title="Presentations to solution",
            yaxis_title="Input presentations",
            template='plotly_white',
            height=600,
            showlegend=False
        )
        return _to_html(fig, "batch")
    except Exception as e:
        logging.error(f"Batch plot error: {e}")
        return "<h3>Error generating batch plot.</h3>"


def generate_field_heatmap(field, title="Oxidized catalyst v", grid=None):
    """
    Heatmap of a medium field (rows top to bottom) with optional CA grid lines.
    """
    try:
        logging.debug(f"Generating heatmap '{title}'.")
        field = np.asarray(field, dtype=np.float64)
        fig = go.Figure(go.Heatmap(z=field, colorscale='Viridis'))
        if grid is not None:
            x0, y0 = grid.origin_x - 0.5, grid.origin_y - 0.5
            for c in range(grid.cols + 1):
                x = x0 + c * grid.cell_w
                fig.add_shape(type='line', x0=x, x1=x, y0=y0, y1=y0 + grid.rows * grid.cell_h,
                              line=dict(color='white', width=1))
            for r in range(grid.rows + 1):
                y = y0 + r * grid.cell_h
                fig.add_shape(type='line', x0=x0, x1=x0 + grid.cols * grid.cell_w, y0=y, y1=y,
                              line=dict(color='white', width=1))
        fig.update_layout(
            title=title,
            template='plotly_white',
            height=700,
            yaxis=dict(autorange='reversed', scaleanchor='x')
        )
        return _to_html(fig, "field")
    except Exception as e:
        logging.error(f"Heatmap error: {e}")
        return "<h3>Error generating heatmap.</h3>"
