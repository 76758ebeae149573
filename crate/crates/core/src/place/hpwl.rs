use crate::error::{Error, Result};
use crate::netlist::{Net, Netlist, Placement};

/// Half-perimeter of one net's pin bounding box, in site units.
pub fn net_hpwl(netlist: &Netlist, placement: &Placement, net: &Net) -> f64 {
    let (mut xlo, mut xhi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &net.pins {
        let (x, y) = placement.pin_position(netlist, p);
        xlo = xlo.min(x);
        xhi = xhi.max(x);
        ylo = ylo.min(y);
        yhi = yhi.max(y);
    }
    (xhi - xlo) + (yhi - ylo)
}

/// Total half-perimeter wirelength. Every pin's cell must have a finite position.
pub fn hpwl(netlist: &Netlist, placement: &Placement) -> Result<f64> {
    let mut total = 0.0;
    for net in &netlist.nets {
        for p in &net.pins {
            match placement.pos.get(p.cell) {
                Some((x, y)) if x.is_finite() && y.is_finite() => {}
                _ => return Err(Error::IncompletePlacement(netlist.cells[p.cell].name.clone())),
            }
        }
        total += net_hpwl(netlist, placement, net);
    }
    Ok(total)
}
