use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use ffverify::aklt::aklt_hamiltonian;
use ffverify::{generators, FfHamiltonian, Hypergraph};

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// AKLT chain with N sites
    #[arg(long, value_name = "N")]
    pub chain: Option<usize>,
    /// Periodic boundary conditions for generated lattices
    #[arg(long)]
    pub closed: bool,
    /// AKLT honeycomb patch (brick-wall form) of W×H sites
    #[arg(long, value_name = "WxH")]
    pub honeycomb: Option<String>,
    /// AKLT square-lattice patch of W×H sites
    #[arg(long, value_name = "WxH")]
    pub square: Option<String>,
    /// AKLT model on a graph given as JSON `{"vertices": [...], "edges": [[a, b], ...]}`
    #[arg(long, value_name = "FILE")]
    pub graph: Option<PathBuf>,
    /// Saved Hamiltonian directory (manifest.json plus term files)
    #[arg(long, value_name = "DIR")]
    pub hamiltonian: Option<PathBuf>,
}

pub struct Instance {
    pub hamiltonian: FfHamiltonian,
    /// Built as an AKLT model, so spin tests apply.
    pub aklt: bool,
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("expected WxH, got {s:?}"))?;
    Ok((w.trim().parse()?, h.trim().parse()?))
}

impl InstanceArgs {
    pub fn build(&self) -> Result<Instance> {
        let given = [
            self.chain.is_some(),
            self.honeycomb.is_some(),
            self.square.is_some(),
            self.graph.is_some(),
            self.hamiltonian.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if given != 1 {
            return Err(ffverify::Error::Input(
                "give exactly one of --chain, --honeycomb, --square, --graph, --hamiltonian".into(),
            )
            .into());
        }
        if let Some(dir) = &self.hamiltonian {
            return Ok(Instance {
                hamiltonian: ffverify::io::load_hamiltonian(dir)?,
                aklt: false,
            });
        }
        let periodic = (self.closed, self.closed);
        let g: Hypergraph = if let Some(n) = self.chain {
            generators::chain(n, self.closed)?
        } else if let Some(s) = &self.honeycomb {
            let (w, h) = parse_dims(s).map_err(input)?;
            generators::honeycomb(w, h, periodic)?
        } else if let Some(s) = &self.square {
            let (w, h) = parse_dims(s).map_err(input)?;
            generators::square(w, h, periodic)?
        } else if let Some(path) = &self.graph {
            let text = std::fs::read_to_string(path)
                .map_err(ffverify::Error::from)
                .with_context(|| format!("reading {}", path.display()))?;
            Hypergraph::from_json(&text)?
        } else {
            bail!("no instance given");
        };
        Ok(Instance {
            hamiltonian: aklt_hamiltonian(&g)?,
            aklt: true,
        })
    }
}

fn input(e: anyhow::Error) -> anyhow::Error {
    ffverify::Error::Input(format!("{e:#}")).into()
}
