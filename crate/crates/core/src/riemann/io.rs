//! JSON form of surfaces and sampled fields.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mesh::{MeshedSurface, Node, SurfaceKind};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceDump {
    pub kind: SurfaceKind,
    pub nodes: Vec<Node>,
    pub weights: Vec<f64>,
    pub branch_poly: Vec<f64>,
    pub loops: Vec<Vec<usize>>,
    pub fields: BTreeMap<String, Vec<[f64; 2]>>,
}

pub fn dump_surface(surface: &MeshedSurface, fields: &[(&str, &[Complex64])]) -> SurfaceDump {
    SurfaceDump {
        kind: surface.kind,
        nodes: surface.nodes.clone(),
        weights: surface.weights.clone(),
        branch_poly: surface.branch_poly.clone(),
        loops: surface.loops.iter().map(|l| l.nodes.clone()).collect(),
        fields: fields
            .iter()
            .map(|(name, vals)| (name.to_string(), vals.iter().map(|z| [z.re, z.im]).collect()))
            .collect(),
    }
}

pub fn surface_json(surface: &MeshedSurface, fields: &[(&str, &[Complex64])]) -> serde_json::Result<String> {
    serde_json::to_string(&dump_surface(surface, fields))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_fields() {
        let s = MeshedSurface::flat_torus(3).unwrap();
        let f: Vec<Complex64> = s.nodes.iter().map(|n| n.coord * 2.0).collect();
        let text = surface_json(&s, &[("phi", &f)]).unwrap();
        let back: SurfaceDump = serde_json::from_str(&text).unwrap();
        assert_eq!(back.kind, SurfaceKind::FlatTorus);
        assert_eq!(back.fields["phi"][4], [f[4].re, f[4].im]);
        assert_eq!(back.loops.len(), 2);
    }
}
