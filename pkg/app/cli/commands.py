"""
Batch commands. Each takes a RunConfig and returns an OutputTable in
boundary units (μm, N, N/m, mPa).
"""

import logging

from app.cli.output import OutputTable, base_metadata
from app.models.geometry_schema import Geometry, MultipoleTruncation
from app.services import pfa_service, scattering_service
from app.services.material_service import build_material
from app.utils.errors import ConfigError
from app.utils.units import gradient_to_mpa, m_to_um, um_to_m

# Setup logging
logger = logging.getLogger(__name__)


def material_from_config(config):
    return build_material(config.material.value, config.plasma_ev, config.gamma_ev, config.optical_data)


def _provenance(config, model):
    meta = {"material": model.label, "plasma_ev": repr(config.plasma_ev)}
    if config.material.value in ("drude", "lorentz_drude", "tabulated"):
        meta["gamma_ev"] = repr(config.gamma_ev)
    if model.data is not None:
        meta["optical_data"] = config.optical_data or "shipped Au sample"
        meta["optical_data_note"] = next((line for line in model.data.source.splitlines() if "provenance" in line),
                                         model.data.source.splitlines()[0] if model.data.source else "")
    return meta


def _separations(config):
    values = config.separations_um()
    if not values:
        raise ConfigError("no separation given: set a_um or a_min_um/a_max_um")
    return values


def _theta_table(config):
    return pfa_service.load_theta_table(config.theta_table)


def _truncation(config, geom):
    return MultipoleTruncation.for_geometry(geom, config.temperature_k, l_max=config.l_max, m_max=config.m_max,
                                            n_max=config.n_max)


def cmd_force(config):
    """Approximate force per separation, normalized by the ideal PFA force"""
    model = material_from_config(config)
    table = _theta_table(config)
    radius = um_to_m(config.radius_um)
    columns = ["a_um", "F_approx_N", "F_n0_N", "F_npos_pfa_N", "theta", "F_over_F_ideal", "F_pfa_over_F_ideal"]
    if config.oracle:
        columns.append("F_oracle_over_F_ideal")

    rows, records, n_max = [], [], []
    for a_um in _separations(config):
        a = um_to_m(a_um)
        result = pfa_service.force_approx(model, radius, a, config.temperature_k, table, threads=config.threads)
        ideal = pfa_service.ideal_pfa_force(radius, a)
        row = [a_um, result.total, result.n0_exact, result.n_pos_pfa, result.theta, result.total / ideal,
               result.pfa_total / ideal]
        if config.oracle:
            geom = Geometry(radius=radius, gap=a)
            oracle = scattering_service.force_scattering(model, geom, config.temperature_k, _truncation(config, geom),
                                                         threads=config.threads)
            row.append(oracle.total / ideal)
        rows.append(row)
        records.append(result.model_dump(mode="json"))
        n_max.append(str(result.n_max))

    metadata = base_metadata("force", config)
    metadata.update(_provenance(config, model))
    metadata["n_max"] = ",".join(n_max)
    return OutputTable(columns=columns, rows=rows, metadata=metadata, records=records)


def cmd_gradient(config):
    """Approximate force gradient per separation, with F'/2πR in mPa"""
    model = material_from_config(config)
    table = _theta_table(config)
    radius = um_to_m(config.radius_um)
    columns = ["a_um", "G_approx_N_per_m", "G_n0_N_per_m", "G_npos_pfa_N_per_m", "theta_tilde",
               "G_over_2piR_mPa", "G_pfa_over_2piR_mPa", "approx_vs_pfa_percent"]

    rows, records, n_max = [], [], []
    for a_um in _separations(config):
        a = um_to_m(a_um)
        result = pfa_service.gradient_approx(model, radius, a, config.temperature_k, table, threads=config.threads)
        rows.append([a_um, result.total, result.n0_exact, result.n_pos_pfa, result.theta,
                     gradient_to_mpa(result.total, radius), gradient_to_mpa(result.pfa_total, radius),
                     100.0 * result.pfa_deviation])
        records.append(result.model_dump(mode="json"))
        n_max.append(str(result.n_max))

    metadata = base_metadata("gradient", config)
    metadata.update(_provenance(config, model))
    metadata["n_max"] = ",".join(n_max)
    return OutputTable(columns=columns, rows=rows, metadata=metadata, records=records)


def cmd_compare(config):
    """Approximate and PFA forces against the scattering-formula oracle"""
    model = material_from_config(config)
    table = _theta_table(config)
    radius = um_to_m(config.radius_um)
    columns = ["a_um", "F_approx_N", "F_oracle_N", "approx_error_percent", "F_pfa_N", "pfa_error_percent"]

    rows, truncations = [], []
    for a_um in _separations(config):
        a = um_to_m(a_um)
        geom = Geometry(radius=radius, gap=a)
        truncation = _truncation(config, geom)
        approx = pfa_service.force_approx(model, radius, a, config.temperature_k, table, threads=config.threads)
        oracle = scattering_service.force_scattering(model, geom, config.temperature_k, truncation,
                                                     threads=config.threads)
        approx_error = 100.0 * abs(approx.total - oracle.total) / abs(oracle.total)
        pfa_error = 100.0 * abs(approx.pfa_total - oracle.total) / abs(oracle.total)
        rows.append([a_um, approx.total, oracle.total, approx_error, approx.pfa_total, pfa_error])
        truncations.append(f"{truncation.l_max}/{truncation.m_max}/{truncation.n_max}")
        logger.info(f"compare a={a_um} um: approx error {approx_error:.4f}%, PFA error {pfa_error:.4f}%")

    metadata = base_metadata("compare", config)
    metadata.update(_provenance(config, model))
    metadata["truncation_l_m_n"] = ",".join(truncations)
    return OutputTable(columns=columns, rows=rows, metadata=metadata)


def cmd_converge(config):
    """Oracle free energy (exact n=0 plus n>0) along an l_max schedule at a single separation"""
    if config.a_um is None:
        raise ConfigError("converge needs a single separation a_um")
    model = material_from_config(config)
    geom = Geometry(radius=um_to_m(config.radius_um), gap=um_to_m(config.a_um))
    schedule = config.schedule
    if schedule is None:
        six = MultipoleTruncation.for_geometry(geom, config.temperature_k).l_max
        schedule = [six, 2 * six]
    report = scattering_service.convergence_scan(model, geom, config.temperature_k, schedule,
                                                 target_delta=config.target_delta, m_max=config.m_max,
                                                 n_max=config.n_max, threads=config.threads)

    metadata = base_metadata("converge", config)
    metadata.update(_provenance(config, model))
    metadata["a_um"] = repr(config.a_um)
    metadata["target_delta"] = repr(config.target_delta)
    metadata["converged_l_max"] = str(report.converged_l_max) if report.converged_l_max else "none"
    rows = [[l_max, value, delta] for l_max, value, delta in zip(report.l_max_values, report.values, report.deltas)]
    return OutputTable(columns=["l_max", "free_energy_J", "relative_delta"], rows=rows, metadata=metadata)


def cmd_theta(config):
    """θ and θ̃ at the requested separations, or the whole table when none are given"""
    table = _theta_table(config)
    separations = config.separations_um()
    if separations:
        rows = [[a_um, *pfa_service.theta_coeffs(table, um_to_m(a_um))] for a_um in separations]
    else:
        rows = [[round(m_to_um(gap), 12), theta, theta_tilde] for gap, theta, theta_tilde in table.rows]

    metadata = base_metadata("theta", config)
    metadata["theta_table"] = config.theta_table or "shipped Au table"
    metadata["table_material"] = table.material
    metadata["table_temperature_k"] = f"{table.temperature:g}"
    return OutputTable(columns=["a_um", "theta", "theta_tilde"], rows=rows, metadata=metadata)


COMMANDS = {
    "force": cmd_force,
    "gradient": cmd_gradient,
    "compare": cmd_compare,
    "converge": cmd_converge,
    "theta": cmd_theta,
}
