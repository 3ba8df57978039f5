//! Trotter-error metrics: time-averaged vs pointwise observable errors,
//! averaged simulation infidelity, and the first-order Floquet-Magnus
//! effective Hamiltonian.

use faer::c64;

use crate::evolution::EvolutionRecord;
use crate::linalg::Operator;
use crate::models::{phase_time, ModelInstance};
use crate::signatures::{simulation_fidelity, time_average, TimeSeries};
use crate::{Error, Result};

fn check_aligned(dig: &TimeSeries, ide: &TimeSeries) -> Result<()> {
    if dig.values.len() != ide.values.len()
        || dig.tau != ide.tau
        || dig.stride != ide.stride
    {
        return Err(Error::DimensionMismatch(format!(
            "misaligned series: lengths {}/{}, tau {}/{}, stride {}/{}",
            dig.values.len(),
            ide.values.len(),
            dig.tau,
            ide.tau,
            dig.stride,
            ide.stride
        )));
    }
    Ok(())
}

/// Difference of time averages: |<<O_dig>>_t - <<O_ide>>_t|.
pub fn delta_time_avg(dig: &TimeSeries, ide: &TimeSeries, t: f64) -> Result<f64> {
    check_aligned(dig, ide)?;
    Ok((time_average(dig, t)? - time_average(ide, t)?).abs())
}

/// Time average of pointwise differences: <|<O_dig> - <O_ide>|>_t.
/// Always >= [`delta_time_avg`] by the triangle inequality.
pub fn delta_pointwise(dig: &TimeSeries, ide: &TimeSeries, t: f64) -> Result<f64> {
    check_aligned(dig, ide)?;
    let diffs: Vec<f64> = dig
        .values
        .iter()
        .zip(&ide.values)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let series = TimeSeries::new("abs_diff", dig.tau, dig.stride, diffs);
    time_average(&series, t)
}

/// Averaged simulation infidelity 1 - <F(psi_dig, psi_ide)>_t.
pub fn avg_sim_infidelity(record: &EvolutionRecord, t: f64) -> Result<f64> {
    let f = simulation_fidelity(record)?;
    Ok((1.0 - time_average(&f, t)?).clamp(0.0, 1.0))
}

/// First-order Floquet-Magnus effective Hamiltonian
/// H_F = H_M + i (2 pi tau / 2) sum_{l > m} [H_l, H_m], where l, m index the
/// stored summand list (later-listed summands act first on the state).
pub fn floquet_magnus_first(model: &ModelInstance, tau: f64) -> Result<Operator> {
    if model.summands.len() < 2 {
        return Err(Error::InvalidArgument(
            "Floquet-Magnus term needs at least two summands".into(),
        ));
    }
    let mut acc = Operator::zeros(model.factor_dims().to_vec());
    for l in 0..model.summands.len() {
        for m in 0..l {
            acc = &acc + &model.summands[l].1.commutator(&model.summands[m].1)?;
        }
    }
    let h_f = &model.h_m + &acc.scale(c64::new(0.0, phase_time(tau) / 2.0));
    h_f.require_hermitian(1e-10)?;
    Ok(h_f)
}
