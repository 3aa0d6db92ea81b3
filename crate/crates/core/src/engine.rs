//! The shared computation context: Γ, the cusped graph, ρ and the filler
//! settings, plus the fill cache keyed by canonical triples.

use std::sync::Arc;

use dashmap::DashMap;

use crate::chain::SimplicialChain;
use crate::graph::{CuspedGraph, Vertex};
use crate::hyperbolization::Hyperbolization;
use crate::word::Gamma;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FillerKind {
    Cone,
    Lp,
}

impl std::str::FromStr for FillerKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim() {
            "cone" => Ok(FillerKind::Cone),
            "lp" => Ok(FillerKind::Lp),
            other => Err(crate::Error::Invalid(format!("unknown filler {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FillSettings {
    pub kappa: u32,
    pub recursion_cap: u32,
    pub lp_window_radius: u32,
    pub lp_simplex_cap: usize,
    pub lp_exact_limit: usize,
    pub filler: FillerKind,
    pub validate_rips: bool,
}

impl Default for FillSettings {
    fn default() -> Self {
        FillSettings {
            kappa: 8,
            recursion_cap: 64,
            lp_window_radius: 0,
            lp_simplex_cap: 20_000,
            lp_exact_limit: 2_000,
            filler: FillerKind::Cone,
            validate_rips: false,
        }
    }
}

#[derive(Debug)]
pub struct Engine {
    pub graph: CuspedGraph,
    pub rho: Hyperbolization,
    pub fill: FillSettings,
    pub(crate) phi_cache: DashMap<Vec<Vertex>, Arc<SimplicialChain>>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(
            CuspedGraph::default(),
            Hyperbolization::default(),
            FillSettings::default(),
        )
    }
}

impl Clone for Engine {
    fn clone(&self) -> Self {
        Engine::new(self.graph.clone(), self.rho.clone(), self.fill.clone())
    }
}

impl Engine {
    pub fn new(graph: CuspedGraph, rho: Hyperbolization, fill: FillSettings) -> Self {
        Engine {
            graph,
            rho,
            fill,
            phi_cache: DashMap::new(),
        }
    }

    pub fn with_kappa(kappa: u32) -> Self {
        let fill = FillSettings {
            kappa,
            ..FillSettings::default()
        };
        Engine::new(CuspedGraph::default(), Hyperbolization::default(), fill)
    }

    pub fn gamma(&self) -> &Gamma {
        self.graph.gamma()
    }

    pub fn kappa(&self) -> u32 {
        self.fill.kappa
    }

    pub fn fill_cache_len(&self) -> usize {
        self.phi_cache.len()
    }

    pub fn clear_caches(&self) {
        self.phi_cache.clear();
        self.graph.clear_caches();
        self.rho.clear_cache();
    }
}
