use super::PowerFlowError;

/// Inputs of the closed-form segment loss with a PV unit downstream.
///
/// Powers are per phase; `v_pu * base_kv` is the line-to-neutral voltage at
/// the sending bus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvLossInputs {
    pub p_kw: f64,
    pub q_kvar: f64,
    pub v_pu: f64,
    pub base_kv: f64,
    pub r_ohm: f64,
    pub p_pv_kw: f64,
    pub q_pv_kvar: f64,
    /// Distance of the PV bus from the source over the feeder length to the
    /// sending bus, in `[0, 1]`.
    pub g_over_l: f64,
}

/// Segment loss in kW:
///
/// `R (P² + Q²) / V² + (R / V²) (P_pv² + Q_pv² − 2 P P_pv − 3 Q Q_pv) (G / L)`
///
/// The `−3 Q Q_pv` coefficient deliberately differs from the `−2 P P_pv` one.
pub fn analytic_pv_loss(inp: PvLossInputs) -> Result<f64, PowerFlowError> {
    if !(inp.v_pu > 0.0 && inp.v_pu.is_finite()) {
        return Err(PowerFlowError::InvalidInput(format!("v_pu must be positive, got {}", inp.v_pu)));
    }
    if !(inp.base_kv > 0.0 && inp.base_kv.is_finite()) {
        return Err(PowerFlowError::InvalidInput(format!("base_kv must be positive, got {}", inp.base_kv)));
    }
    if !(0.0..=1.0).contains(&inp.g_over_l) {
        return Err(PowerFlowError::InvalidInput(format!(
            "g_over_l must lie in [0, 1], got {}",
            inp.g_over_l
        )));
    }
    let v_kv = inp.v_pu * inp.base_kv;
    let v2 = v_kv * v_kv;
    let flow = inp.r_ohm * (inp.p_kw * inp.p_kw + inp.q_kvar * inp.q_kvar) / v2;
    let pv = inp.r_ohm
        * (inp.p_pv_kw * inp.p_pv_kw + inp.q_pv_kvar * inp.q_pv_kvar
            - 2.0 * inp.p_kw * inp.p_pv_kw
            - 3.0 * inp.q_kvar * inp.q_pv_kvar)
        / v2
        * inp.g_over_l;
    // kW²/kV² · Ω is watts
    Ok((flow + pv) / 1000.0)
}
