use super::density::{lse_wirelength, DensityGrid};
use super::{hpwl, PlacerConfig, RegionConstraintSet};
use crate::error::{Error, Result};
use crate::netlist::{CellId, Netlist, Placement};

/// Keeps a cell's box inside the core, then applies its region constraints.
fn project(netlist: &Netlist, constraints: &RegionConstraintSet, c: CellId, x: f64, y: f64) -> (f64, f64) {
    let core = netlist.core();
    let cell = &netlist.cells[c];
    let (w, h) = (cell.width as f64, cell.height as f64);
    let x = x.clamp(core.x0, core.x1 - w);
    let y = y.clamp(core.y0, core.y1 - h);
    let (x, y) = constraints.project(c, x, y, w, h, netlist.row_height());
    (x.clamp(core.x0, core.x1 - w), y.clamp(core.y0, core.y1 - h))
}

/// Preconditioned gradient descent on smoothed wirelength plus annealed
/// density penalty. After every step each constrained cell is projected back
/// into its region and every other cell out of exclusive regions.
///
/// Unconstrained runs never return a placement with larger HPWL than `init`.
pub fn global_place(
    netlist: &Netlist,
    init: &Placement,
    constraints: &RegionConstraintSet,
    config: &PlacerConfig,
) -> Result<Placement> {
    config.validate()?;
    constraints.check_capacity(netlist)?;
    let movable: Vec<CellId> = netlist.placeable_cells().map(|c| c.id).collect();
    if movable.is_empty() {
        return Ok(init.clone());
    }
    let init_hpwl = hpwl(netlist, init)?;
    let rh = netlist.row_height();

    let mut pl = init.clone();
    for &c in &movable {
        let (x, y) = pl.get(c);
        let (x, y) = project(netlist, constraints, c, x, y);
        pl.set(c, x, y);
    }

    let mut grid = DensityGrid::new(netlist, init, config.bin_size);
    let mut grad = vec![(0.0, 0.0); netlist.cells.len()];
    let pins: Vec<f64> = (0..netlist.cells.len()).map(|c| netlist.nets_of(c).len() as f64).collect();
    let iters = config.max_global_iters;
    for it in 0..iters {
        let frac = it as f64 / iters.max(1) as f64;
        let gamma = (config.smoothing * (config.smoothing_min / config.smoothing).powf(frac)).max(config.smoothing_min);
        let lambda = config.lambda * config.lambda_growth.powi((it / config.lambda_period) as i32);
        let step = config.step_size * (1.0 - 0.9 * frac);

        grad.iter_mut().for_each(|g| *g = (0.0, 0.0));
        lse_wirelength(netlist, &pl, gamma, Some(&mut grad));
        grid.fill(netlist, &pl);
        // Blur radius shrinks to zero so late iterations follow the exact penalty gradient.
        let radius = 0.25 * grid.nx.max(1) as f64 * (1.0 - frac).powi(2);
        let rx = radius.round() as usize;
        let ry = (radius * grid.bin_w / rh).round() as usize;
        let field = grid.smoothed_overflow(rx, ry);
        for &c in &movable {
            let cell = &netlist.cells[c];
            let (x, y) = pl.get(c);
            let (cx, cy) = (x + 0.5 * cell.width as f64, y + 0.5 * cell.height as f64);
            let (dx, dy) = grid.field_grad(&field, cell.area(), cx, cy);
            // Wirelength gradient is per site unit in both axes; density is per (site, row).
            let gx = grad[c].0 + lambda * dx;
            let gy = grad[c].1 + lambda * dy / rh;
            let pre = pins[c].max(1.0) + lambda * cell.area();
            let mx = (-step * gx / pre).clamp(-step, step);
            let my = (-step * gy / pre).clamp(-step, step) / rh;
            let (nx, ny) = project(netlist, constraints, c, x + mx, y + my);
            pl.set(c, nx, ny);
        }
        if !pl.is_finite() {
            return Err(Error::InvalidArgument(format!("global placement diverged at iteration {it}")));
        }
    }
    if constraints.is_empty() && hpwl(netlist, &pl)? > init_hpwl {
        return Ok(init.clone());
    }
    Ok(pl)
}
