use gaussbatt::bath_oracle::{evolve_moments, BathDiscretization, OracleOptions};
use gaussbatt::energetics::energy;
use gaussbatt::thermo::switching_work;
use gaussbatt::{derive_constants, Engine, SystemConfig};
use std::time::Instant;

fn main() {
    let sets = [
        ("fig1", SystemConfig::uniform(6, 5.0, 2.0, 0.5, 0.5).unwrap()),
        ("cold", SystemConfig::uniform(6, 5.0, 2.0, 0.01, 0.01).unwrap()),
        ("tblA", SystemConfig::uniform(6, 0.528, 7.344, 0.01, 1.0).unwrap()),
        ("tblB", SystemConfig::uniform(6, 1.571, 0.922, 0.01, 1.0).unwrap()),
        ("nuni", SystemConfig::with_alphas(vec![1.0, 0.5, 1.5, 0.8], 2.0, 3.0, 1.0, 0.3).unwrap()),
    ];
    for (label, cfg) in sets {
        let t0 = Instant::now();
        let dc = derive_constants(&cfg).unwrap();
        let bath = BathDiscretization::default_for(&cfg);
        let mut grid = vec![0.0];
        grid.extend([0.25, 0.5, 1.0, 1.5].iter().map(|f| f * dc.tau));
        let snaps = evolve_moments(&cfg, &bath, &grid, &OracleOptions::default()).unwrap();
        let eng = Engine::new(cfg.clone()).unwrap();
        let e_r0 = snaps[0].bath_energy;
        let mut worst_sigma: f64 = 0.0;
        let mut worst_bal: f64 = 0.0;
        for s in snaps.iter().skip(1) {
            let bm = eng.bm_block(s.t).unwrap();
            let sig = bm.sigma(&dc);
            for idx in [(0, 0), (0, 1), (1, 1)] {
                let dev = (sig[idx] - s.sigma_bm[idx]).abs();
                let tol = (1e-3 * s.sigma_bm[idx].abs()).max(1e-5);
                worst_sigma = worst_sigma.max(dev / tol);
            }
            let (w, _) = switching_work(&cfg, &dc, &bm);
            let de_b = energy(&bm, &dc, cfg.n_cells).e_bm - 0.5 * dc.c_t0;
            let resid = (s.bath_energy - e_r0 + de_b - w).abs();
            worst_bal = worst_bal.max(resid / (1e-3 * w.abs()).max(1e-4));
        }
        println!(
            "{label}: modes={} sigma={:.3}x bal={:.3}x  [{:.1} s]",
            bath.n_modes(), worst_sigma, worst_bal, t0.elapsed().as_secs_f64()
        );
    }
}
