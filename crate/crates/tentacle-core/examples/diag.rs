use tentacle_core::grid::Grid;
use tentacle_core::params::ParamExprs;
use tentacle_core::static_opt::{residual, static_optimize, StaticOptions, StaticProblem};
use tentacle_core::vec2::Vec2;

fn main() {
    let grid = Grid::space_only(40).unwrap();
    let exprs = ParamExprs::parse(
        "1",
        "1e-3",
        "0",
        "((1 - s)^2 + 1e-3)/(1 - s)^2",
        "(1 - s)^2",
        "0",
        "0",
    )
    .unwrap();
    let p = tentacle_core::params::build_params(&exprs, &grid).unwrap();
    let target = Vec2::new(-0.3618020337684196, -0.9034919933341836);
    let prob = StaticProblem::new(target);
    match static_optimize(&prob, &p, &grid, &StaticOptions::default()) {
        Ok(sol) => {
            let r = residual(&sol.iterate, &prob, &p, &grid);
            let rmax = r.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let tip = sol.iterate.q[40];
            println!(
                "OK: residual {:.3e} outers {} escalations {} tip ({:.4}, {:.4}) gap {:.3e}",
                rmax,
                sol.iterate.outer_iters,
                sol.escalations,
                tip.x,
                tip.y,
                (tip - target).norm()
            );
            let mut maxc = 0.0f64;
            for k in 1..40 {
                let c = (sol.iterate.q[k + 1] - sol.iterate.q[k] * 2.0 + sol.iterate.q[k - 1])
                    * (1.0 / (grid.ds() * grid.ds()));
                maxc = maxc.max(c.norm());
            }
            println!("maxC {maxc:.6}  J {:.6e}", sol.iterate.objective);
        }
        Err(e) => println!("FAILED: {e}"),
    }
}
