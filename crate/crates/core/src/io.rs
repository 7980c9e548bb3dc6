//! On-disk format for Hamiltonians.
//!
//! A saved Hamiltonian is a directory with `manifest.json` and one binary
//! file per local projector. Each binary file holds the projector row-major
//! as little-endian `f64` pairs `(re, im)`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::graph::{GraphFile, Hypergraph};
use crate::hamiltonian::FfHamiltonian;
use crate::linalg::CMatrix;
use crate::scalar::{Real, C};

pub const MANIFEST: &str = "manifest.json";
pub const DTYPE: &str = "c128-le";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub graph: GraphFile,
    /// Local dimension of every vertex, in vertex order.
    pub node_dims: Vec<usize>,
    /// File name of each projector, in edge order.
    pub terms: Vec<String>,
    pub dtype: String,
}

fn encode<T: Real>(m: &CMatrix<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 * m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].re.as_f64().to_le_bytes());
            out.extend_from_slice(&m[(i, j)].im.as_f64().to_le_bytes());
        }
    }
    out
}

fn decode<T: Real>(bytes: &[u8], d: usize, name: &str) -> Result<CMatrix<T>> {
    if bytes.len() != 16 * d * d {
        return Err(input_err!(
            "{name} has {} bytes, expected {} for a {d}x{d} matrix",
            bytes.len(),
            16 * d * d
        ));
    }
    let f = |k: usize| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[8 * k..8 * k + 8]);
        T::lit(f64::from_le_bytes(b))
    };
    Ok(CMatrix::from_fn(d, d, |i, j| {
        let k = 2 * (i * d + j);
        C::new(f(k), f(k + 1))
    }))
}

pub fn save_hamiltonian<T: Real>(h: &FfHamiltonian<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut terms = Vec::with_capacity(h.edge_count());
    for (e, p) in h.projectors().iter().enumerate() {
        let name = format!("term_{e:05}.bin");
        fs::write(dir.join(&name), encode(&p.matrix))?;
        terms.push(name);
    }
    let manifest = Manifest {
        graph: h.graph().to_file(),
        node_dims: h.node_dims(),
        terms,
        dtype: DTYPE.to_string(),
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_hamiltonian<T: Real>(dir: &Path) -> Result<FfHamiltonian<T>> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?;
    if manifest.dtype != DTYPE {
        return Err(input_err!("unsupported dtype {:?}", manifest.dtype));
    }
    let graph = Hypergraph::from_file(manifest.graph)?;
    if manifest.terms.len() != graph.edge_count()
        || manifest.node_dims.len() != graph.vertex_count()
    {
        return Err(input_err!(
            "manifest lists the wrong number of terms or node dimensions"
        ));
    }
    let mut projectors = Vec::with_capacity(manifest.terms.len());
    for (e, name) in manifest.terms.iter().enumerate() {
        if name.contains('/') || name.contains('\\') || name == ".." {
            return Err(input_err!(
                "term file name {name:?} must be a plain file name"
            ));
        }
        let d: usize = graph
            .edge(e)
            .iter()
            .map(|&v| manifest.node_dims[graph.vertex_index(v).expect("edge vertex")])
            .product();
        projectors.push(decode(&fs::read(dir.join(name))?, d, name)?);
    }
    FfHamiltonian::new(graph, &manifest.node_dims, projectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aklt::aklt_hamiltonian;
    use crate::graph::generators;
    use crate::linalg::max_abs;

    #[test]
    fn round_trip() {
        let g = generators::chain(4, false).unwrap();
        let h = aklt_hamiltonian::<f64>(&g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_hamiltonian(&h, dir.path()).unwrap();
        let back: FfHamiltonian<f64> = load_hamiltonian(dir.path()).unwrap();
        assert_eq!(back.graph(), h.graph());
        assert_eq!(back.node_dims(), h.node_dims());
        for (a, b) in back.projectors().iter().zip(h.projectors()) {
            assert_eq!(max_abs(&(&a.matrix - &b.matrix)), 0.0);
        }
    }

    #[test]
    fn rejects_truncated_terms() {
        let g = generators::chain(2, false).unwrap();
        let h = aklt_hamiltonian::<f64>(&g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_hamiltonian(&h, dir.path()).unwrap();
        fs::write(dir.path().join("term_00000.bin"), [0u8; 10]).unwrap();
        assert!(load_hamiltonian::<f64>(dir.path()).is_err());
    }
}
