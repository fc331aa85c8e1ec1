# controllers/main_controller.py

import logging
import multiprocessing
import os

from models.batch_model import (
    aggregate, batch_summary, execute_job, format_table,
    mean_fitness_curve, results_from_records, run_directory, variant_config, variant_label,
    TABLE_HEADER,
)
from models.ca_model import CaGenome, LightGrid
from models.errors import BzGateError
from models.evolution_model import MAX_FITNESS
from models.experiment_config import ExperimentConfig
from models.gate_model import (
    default_mask, fragment_areas, initiated_medium, presentation_outputs, score_outputs
)
from models.imaging_model import count_fragments, diff_threshold, render
from models.reaction_model import run_epoch
from plots.plot_functions import generate_batch_plot, generate_field_heatmap, generate_fitness_plot
from utils.helper_functions import format_metric, read_json, write_json, write_text
from utils.pnm_io import export_fields, write_pbm, write_ppm
from views.console_view import ConsoleView

# keys execute_run adds to the config echo of a result
_RUN_KEYS = ("RUN_INDEX", "VARIANT")

LIGHT_NAMES = {"low": 0, "threshold": 1, "high": 2}


def _bits_label(bits) -> str:
    return "".join(str(int(b)) for b in bits)


class MainController:
    """
    Runs the CLI verbs against a validated ExperimentConfig. Every verb
    returns its result, or None after reporting an error through the view.
    """
    def __init__(self, view: ConsoleView, config: ExperimentConfig, evaluator_factory=None):
        self.view = view
        self.config = config
        # replaces the simulated gate evaluator (tests, dry runs)
        self.evaluator_factory = evaluator_factory

    # verbs

    def validate_config(self):
        try:
            self.config.validate()
        except BzGateError as e:
            logging.error(f"validate-config error: {e}")
            self.view.show_error_message("Config Error", str(e))
            return None
        self.view.show_info_message("Config", "Configuration is valid.")
        self.view.status(self.config.serialize().rstrip("\n"))
        return self.config

    def run_single(self, run_index: int = 0):
        """One hillclimber search; writes the run directory and its fitness plot."""
        try:
            config = self.config.validate()
            label = variant_label(config)
            record = execute_job((config, label, run_index, self.evaluator_factory))
            result = results_from_records([record])[0]
            out_dir = run_directory(config, label, run_index)
            html = generate_fitness_plot({label: result.trajectory}, config.gate_name.upper(), MAX_FITNESS)
            write_text(html, os.path.join(out_dir, "fitness.html"))
        except BzGateError as e:
            logging.error(f"run error: {e}")
            self.view.show_error_message("Run Error", str(e))
            return None
        if result.success:
            msg = f"Solved {config.gate_name.upper()} in {result.presentations_to_solution} presentations."
        else:
            msg = (f"No solution within {config.search_budget} presentations "
                   f"(best fitness {result.final_fitness}/{MAX_FITNESS}).")
        self.view.show_info_message("Run", f"{msg} Artifacts in {out_dir}.")
        return result

    def run_batch(self, variants=None):
        """
        `runs` independent searches per controller variant, then the results
        table, mean fitness curves and plots. Without `variants` only the
        configured controller runs.
        """
        try:
            config = self.config.validate()
            labels = list(variants) if variants else [variant_label(config)]
            gate = config.gate_name.upper()
            stats, curves = [], {}
            for label in labels:
                vconfig = variant_config(config, label) if variants else config
                jobs = [(vconfig, label, i, self.evaluator_factory) for i in range(vconfig.run_runs)]
                self.view.status(f"{gate} {label}: {len(jobs)} runs on {vconfig.run_workers} worker(s)")
                results = results_from_records(self._map_jobs(jobs, vconfig.run_workers))
                stats.append(aggregate(results, gate, label, vconfig.search_budget))
                curves[label] = mean_fitness_curve(results, vconfig.search_budget)
            self._write_batch(config, stats, curves)
        except BzGateError as e:
            logging.error(f"batch error: {e}")
            self.view.show_error_message("Batch Error", str(e))
            return None
        self.view.show_table(TABLE_HEADER, [s.row() for s in stats])
        if any(s.any_failed for s in stats):
            self.view.status(f"* lower bound: failed runs counted at the budget of {config.search_budget}.")
        return stats

    def replay(self, result_path, out_dir=None):
        """
        Re-run a saved genome on the four inputs and export every frame,
        the per-cycle state/light log and a heatmap of the final v field.
        """
        try:
            if os.path.isdir(result_path):
                result_path = os.path.join(result_path, "result.json")
            if not os.path.exists(result_path):
                raise BzGateError(f"Run result {result_path} not found.")
            record = read_json(result_path)
            run_dir = os.path.dirname(os.path.abspath(result_path))
            items = {k: v for k, v in record.get("config", {}).items() if k not in _RUN_KEYS}
            config = ExperimentConfig.from_items(items).validate()
            genome = CaGenome.load(os.path.join(run_dir, record.get("genome_file") or "genome.bin"))
            experiment = config.gate_experiment()
            out_dir = out_dir or os.path.join(run_dir, "replay")

            traces = presentation_outputs(genome, experiment, self._frame_sink_factory(experiment, out_dir))
            outputs = [t.output for t in traces]
            fitness = score_outputs(outputs, experiment.truth_table)
            for trace in traces:
                self._write_trace(trace, out_dir)
            write_json({
                "gate": experiment.gate.value,
                "outputs": {_bits_label(t.bits): t.output for t in traces},
                "active_cells": {_bits_label(t.bits): t.final_state.popcount() for t in traces},
                "fitness": fitness,
                "recorded_fitness": record.get("final_fitness"),
            }, os.path.join(out_dir, "replay.json"))
        except (BzGateError, OSError, KeyError, ValueError) as e:
            logging.error(f"replay error: {e}")
            self.view.show_error_message("Replay Error", str(e))
            return None
        if fitness != record.get("final_fitness"):
            logging.warning(f"Replay fitness {fitness} differs from recorded {record.get('final_fitness')}.")
        self.view.show_info_message(
            "Replay", f"Outputs {outputs} (fitness {fitness}/{MAX_FITNESS}); frames in {out_dir}."
        )
        return traces

    def render_state(self, bits=(1, 1), epochs=0, light="low", out_dir=None):
        """
        Export one medium state: the reset medium initiated with `bits`,
        optionally advanced `epochs` cycles under uniform light.
        """
        try:
            config = self.config.validate()
            if light not in LIGHT_NAMES:
                raise BzGateError(f"Unknown light level {light!r}; choose from {', '.join(LIGHT_NAMES)}.")
            ex = config.gate_experiment()
            out_dir = out_dir or os.path.join(config.run_output_dir, "render")
            reset_frame, state = initiated_medium(ex, bits)
            uniform = LightGrid.uniform(LIGHT_NAMES[light], ex.geometry.n_cells)
            for _ in range(epochs):
                state = run_epoch(state, uniform, ex.geometry, ex.iterations_per_cycle, ex.levels, ex.params)

            prefix = f"input_{_bits_label(bits)}_epoch_{epochs:02d}"
            frame = render(state, ex.render_settings)
            binary = diff_threshold(reset_frame, frame, ex.channel_delta)
            write_ppm(frame.pixels, os.path.join(out_dir, f"{prefix}_color.ppm"))
            write_pbm(binary.bits, os.path.join(out_dir, f"{prefix}_binary.pbm"), grid=ex.geometry)
            export_fields(state, out_dir, prefix)
            fragments = count_fragments(binary, ex.geometry)
        except BzGateError as e:
            logging.error(f"render error: {e}")
            self.view.show_error_message("Render Error", str(e))
            return None
        self.view.show_info_message(
            "Render", f"{fragments} wave fragments in the grid; "
                      f"v range {format_metric(float(state.v.min()))}..{format_metric(float(state.v.max()))}; "
                      f"written to {out_dir}."
        )
        return state

    def regimes(self, epochs=5):
        """
        Seed the same fragment under each uniform light level and tabulate
        its white-pixel area per epoch.
        """
        try:
            config = self.config.validate()
            ex = config.gate_experiment()
            geom = ex.geometry
            width, height = geom.cols * geom.cell_w, geom.rows * geom.cell_h
            levels = {"low": ex.levels.low, "threshold": ex.levels.threshold, "high": ex.levels.high}
            areas = {name: fragment_areas(phi, epochs, width, height, ex.iterations_per_cycle,
                                          ex.params, ex.render_settings, ex.channel_delta)
                     for name, phi in levels.items()}
        except BzGateError as e:
            logging.error(f"regimes error: {e}")
            self.view.show_error_message("Regimes Error", str(e))
            return None
        header = ["light", "phi"] + [f"epoch {k}" for k in range(1, epochs + 1)]
        self.view.show_table(header, [[name, f"{levels[name]:g}"] + [str(a) for a in areas[name]]
                                      for name in levels])
        return areas

    def export_mask(self, path):
        try:
            config = self.config.validate()
            mask = default_mask(config.medium_width, config.medium_height, config.geometry(),
                                config.mask_seed_w, config.mask_seed_h)
            mask.save(path)
        except (BzGateError, OSError) as e:
            logging.error(f"export-mask error: {e}")
            self.view.show_error_message("Mask Error", str(e))
            return None
        self.view.show_info_message("Mask", f"Initiation mask written to {path}.")
        return mask

    # helpers

    def _map_jobs(self, jobs, workers):
        if workers <= 1 or len(jobs) <= 1:
            return [execute_job(job) for job in jobs]
        # spawn: numba's threading layer does not survive a fork
        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(processes=min(workers, len(jobs))) as pool:
            return pool.map(execute_job, jobs)

    def _write_batch(self, config, stats, curves):
        gate = config.gate_name.upper()
        out = config.run_output_dir
        write_json(batch_summary(stats, curves), os.path.join(out, f"{gate}_batch_stats.json"))
        write_text(format_table(stats), os.path.join(out, f"{gate}_summary.tsv"))
        lines = ["presentations\t" + "\t".join(curves)]
        points = next(iter(curves.values()), [])
        for i, (p, _) in enumerate(points):
            lines.append(f"{p}\t" + "\t".join(f"{c[i][1]:.4f}" for c in curves.values()))
        write_text("\n".join(lines) + "\n", os.path.join(out, f"{gate}_mean_fitness.tsv"))
        write_text(generate_fitness_plot(curves, gate, MAX_FITNESS), os.path.join(out, f"{gate}_fitness.html"))
        write_text(generate_batch_plot(stats), os.path.join(out, f"{gate}_batch.html"))
        logging.info(f"Batch artifacts for {gate} written to {out}.")

    def _frame_sink_factory(self, experiment, out_dir):
        geometry = experiment.geometry

        def factory(bits):
            directory = os.path.join(out_dir, f"input_{_bits_label(bits)}")

            def sink(cycle, state, color_frame, binary_frame, grid_state):
                write_ppm(color_frame.pixels, os.path.join(directory, f"cycle_{cycle:02d}_color.ppm"))
                write_pbm(binary_frame.bits, os.path.join(directory, f"cycle_{cycle:02d}_binary.pbm"),
                          grid=geometry)
                if cycle == experiment.cycles_per_presentation + 1:
                    html = generate_field_heatmap(state.v, f"Final v, input {_bits_label(bits)}", geometry)
                    write_text(html, os.path.join(directory, "final_v.html"))
            return sink
        return factory

    def _write_trace(self, trace, out_dir):
        directory = os.path.join(out_dir, f"input_{_bits_label(trace.bits)}")
        lines = ["# cycle active grid_state light_grid"]
        for rec in trace.cycles:
            lines.append(f"{rec.cycle} {rec.state.popcount()} {rec.state.to_string()} {rec.light.to_string()}")
        lines.append(f"final {trace.final_state.popcount()} {trace.final_state.to_string()} -")
        lines.append(f"output {trace.output}")
        write_text("\n".join(lines) + "\n", os.path.join(directory, "trace.txt"))
