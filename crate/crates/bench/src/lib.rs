//! Shared fixtures for the benchmarks.

use qsteer_core::{coupling_x2, ControlSignal, CouplingOperator, ModalState};

/// Ground state, x² coupling and the resonant (1,2) pulse with amplitude `1/n` on `[0, t_end]`.
pub fn worked_example(cutoff: usize, n: f64, t_end: f64) -> (ModalState, CouplingOperator, ControlSignal) {
    let psi = ModalState::eigenstate(cutoff, 1).expect("cutoff >= 1");
    (psi, coupling_x2(cutoff), ControlSignal::periodic(1, 2, n, t_end))
}
