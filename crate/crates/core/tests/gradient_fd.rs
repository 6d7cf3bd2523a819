mod common;

use common::*;
use pdepet_core::grid::Grid;
use pdepet_core::phantom::PriorPreset;
use pdepet_core::recon::{gradient_check, ForwardModel, Misfit};
use pdepet_core::{build_projector, SinogramSequence};

#[test]
fn adjoint_gradient_matches_central_differences_in_every_block() {
    let g = Grid::new(6, 6, 1.0, 1.0).unwrap();
    let p = scaled_parameters(g, 3);
    let truth = scaled_parameters(g, 4);
    let model = ForwardModel::new(bolus(g), open_boundary(&g), solver(0.01, 5), 5).unwrap();
    let k = build_projector(g, 6, 9).unwrap();
    let data: SinogramSequence = model.expected_data(&model.simulate(&truth).unwrap(), &k).unwrap();
    let misfit = Misfit::Kl { projector: &k, data: &data };
    let mut reg = PriorPreset::Informed.regularizer(g);
    reg.prior = scaled_parameters(g, 5);
    let report = gradient_check(&model, &p, &misfit, &reg, 0.3, &[1e-4, 1e-5, 1e-6], 11).unwrap();
    print!("{}", report.to_csv());
    assert!(report.max_rel_err() <= 1e-6, "max rel err {}", report.max_rel_err());
}
