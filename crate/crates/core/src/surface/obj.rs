use super::SurfacePair;
use std::io::{self, Write};

/// Wavefront OBJ with Σ and Γ as named objects and the contact polyline as an `l` element.
pub fn write_obj<W: Write>(pair: &SurfacePair, mut out: W) -> io::Result<()> {
    writeln!(out, "# capillary surface pair, theta = {:.12e}", pair.theta)?;
    for v in &pair.vertices {
        writeln!(out, "v {:.12e} {:.12e} {:.12e}", v.x, v.y, v.z)?;
    }
    writeln!(out, "o sigma")?;
    for t in &pair.sigma_triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    writeln!(out, "o gamma")?;
    for t in &pair.gamma_triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    if !pair.contact_polyline.is_empty() {
        writeln!(out, "o contact")?;
        let mut line: Vec<String> = pair.contact_polyline.iter().map(|i| (i + 1).to_string()).collect();
        if pair.contact_closed {
            line.push((pair.contact_polyline[0] + 1).to_string());
        }
        writeln!(out, "l {}", line.join(" "))?;
    }
    Ok(())
}
