//! Per-target position error bounds for one random deployment under
//! equal-power transmission, comparing the full Fisher-information
//! pipeline against the single-beam approximation.
//!
//! ```bash
//! cargo run --example position_bounds
//! ```

use otfs_isac::bounds::Snapshot;
use otfs_isac::fisher::FimMode;
use otfs_isac::optimizer::equal_power;
use otfs_isac::otfs::OtfsGrid;
use otfs_isac::rng::trial_rng;
use otfs_isac::scenario::SimParams;

fn main() -> otfs_isac::Result<()> {
    // desk-scale deployment: 10 APs with 4 antennas, 4 users, 2 targets
    let params = SimParams {
        n_ap: 10,
        m_t: 4,
        k_u: 4,
        t_g: 2,
        n_rx_per_target: 2,
        ..SimParams::default()
    };
    let grid = OtfsGrid::derive(16, 16, 0.5e6, 0.5e-6)?;

    println!(
        "deployment: {} APs ({} antennas), {} users, {} targets, {:.0} m area",
        params.n_ap, params.m_t, params.k_u, params.t_g, params.area_side
    );
    println!(
        "grid: {}x{} bins, {:.1} MHz bandwidth, cp {} samples\n",
        grid.m,
        grid.n,
        grid.bandwidth() / 1e6,
        grid.n_cp
    );

    println!(
        "{:>5} {:>6} {:>14} {:>14} {:>9}",
        "trial", "target", "exact peb [m]", "approx peb [m]", "ratio"
    );
    for trial in 0..5u64 {
        let mut rng = trial_rng(params.master_seed, 0, trial);
        let snapshot = Snapshot::generate(&params, &grid, &mut rng)?;
        let alloc = equal_power(&snapshot.stats, params.p_d)?;
        for t in 0..params.t_g {
            let exact = snapshot.position_bound(t, FimMode::Exact, &alloc)?;
            let approx = snapshot.position_bound(t, FimMode::Approx, &alloc)?;
            println!(
                "{trial:>5} {t:>6} {:>14.3} {:>14.3} {:>9.4}",
                exact.peb,
                approx.peb,
                approx.peb / exact.peb
            );
        }
    }
    println!("\nthe approximation discards cross-beam information, so its bound");
    println!("sits above the exact one; the gap is the coordination gain of");
    println!("reusing communication beams for sensing.");
    Ok(())
}
