//! Sampled deployments: a Poisson point process in a finite window, thinned
//! into device types, and the two-layer geometric graph built on top of it.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::degree::NetworkParams;
use crate::error::{ensure, Error, Result};

/// Cap on grid cells per axis; keeps memory bounded for tiny ranges.
const MAX_CELLS_PER_AXIS: usize = 2048;

/// Rectangular observation window in km, optionally a torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub width: f64,
    pub height: f64,
    #[serde(default = "default_wrap")]
    pub wrap: bool,
}

fn default_wrap() -> bool {
    true
}

impl Region {
    pub fn torus(width: f64, height: f64) -> Self {
        Self { width, height, wrap: true }
    }

    pub fn square_torus(side: f64) -> Self {
        Self::torus(side, side)
    }

    /// Square torus sized to hold about `target_nodes` devices, never
    /// narrower than `min_side`.
    pub fn for_density(lambda: f64, target_nodes: f64, min_side: f64) -> Self {
        Self::square_torus((target_nodes / lambda).sqrt().max(min_side))
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.width >= 0.0 && self.height >= 0.0 && self.width.is_finite() && self.height.is_finite(),
            || format!("region dimensions must be finite and nonnegative, got {}x{}", self.width, self.height),
        )
    }

    /// Squared distance, using the minimum image on a torus.
    pub fn dist2(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let mut dx = (a[0] - b[0]).abs();
        let mut dy = (a[1] - b[1]).abs();
        if self.wrap {
            dx = dx.min(self.width - dx);
            dy = dy.min(self.height - dy);
        }
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeviceType {
    /// Dual radio, active in both layers.
    I,
    /// Single radio, layer 2 only.
    II,
}

/// Point set with device types, before any links are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub positions: Vec<[f64; 2]>,
    pub types: Vec<DeviceType>,
    pub seed: u64,
}

impl Deployment {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn count(&self, ty: DeviceType) -> usize {
        self.types.iter().filter(|&&t| t == ty).count()
    }
}

/// Draw a Poisson(λ·area) number of uniform points, each type-I with
/// probability `p`.
pub fn sample_ppp(params: &NetworkParams, region: &Region, seed: u64) -> Result<Deployment> {
    params.validate()?;
    region.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let expected = params.lambda * region.area();
    let count = if expected > 0.0 {
        let dist = Poisson::new(expected).map_err(|e| Error::InvalidParams(e.to_string()))?;
        dist.sample(&mut rng) as usize
    } else {
        0
    };
    let mut positions = Vec::with_capacity(count);
    let mut types = Vec::with_capacity(count);
    for _ in 0..count {
        let x = rng.random::<f64>() * region.width;
        let y = rng.random::<f64>() * region.height;
        positions.push([x, y]);
        types.push(if rng.random::<f64>() < params.p { DeviceType::I } else { DeviceType::II });
    }
    Ok(Deployment { positions, types, seed })
}

/// Two-layer random geometric graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplexGraph {
    pub positions: Vec<[f64; 2]>,
    pub types: Vec<DeviceType>,
    /// Layer-1 neighbours: type-I devices within `r1`.
    pub adj1: Vec<Vec<u32>>,
    /// Layer-2 neighbours: any device within `r2`.
    pub adj2: Vec<Vec<u32>>,
    pub region: Region,
    pub seed: u64,
}

/// Uniform bucketing of points into square-ish cells no smaller than the
/// search radius, so every neighbour lies in the 3x3 block around a cell.
struct CellGrid {
    nx: usize,
    ny: usize,
    cell_w: f64,
    cell_h: f64,
    wrap: bool,
    starts: Vec<usize>,
    members: Vec<u32>,
}

impl CellGrid {
    fn new(positions: &[[f64; 2]], region: &Region, radius: f64) -> Self {
        let axis = |len: f64| -> usize {
            if radius <= 0.0 {
                MAX_CELLS_PER_AXIS
            } else {
                ((len / radius).floor() as usize).clamp(1, MAX_CELLS_PER_AXIS)
            }
        };
        let nx = axis(region.width);
        let ny = axis(region.height);
        let cell_w = region.width / nx as f64;
        let cell_h = region.height / ny as f64;
        let mut grid = Self { nx, ny, cell_w, cell_h, wrap: region.wrap, starts: vec![0; nx * ny + 1], members: Vec::new() };
        let cells: Vec<usize> = positions.iter().map(|&p| grid.cell_of(p)).collect();
        for &c in &cells {
            grid.starts[c + 1] += 1;
        }
        for c in 0..nx * ny {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        grid.members = vec![0; positions.len()];
        for (i, &c) in cells.iter().enumerate() {
            grid.members[fill[c]] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    fn cell_of(&self, p: [f64; 2]) -> usize {
        let cx = ((p[0] / self.cell_w) as usize).min(self.nx - 1);
        let cy = ((p[1] / self.cell_h) as usize).min(self.ny - 1);
        cy * self.nx + cx
    }

    /// Distinct cells in the 3x3 block around `cell`.
    fn neighbourhood(&self, cell: usize) -> Vec<usize> {
        let (cx, cy) = ((cell % self.nx) as isize, (cell / self.nx) as isize);
        let mut out = Vec::with_capacity(9);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (mut x, mut y) = (cx + dx, cy + dy);
                if self.wrap {
                    x = x.rem_euclid(self.nx as isize);
                    y = y.rem_euclid(self.ny as isize);
                } else if x < 0 || y < 0 || x >= self.nx as isize || y >= self.ny as isize {
                    continue;
                }
                let c = y as usize * self.nx + x as usize;
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }

    fn members(&self, cell: usize) -> &[u32] {
        &self.members[self.starts[cell]..self.starts[cell + 1]]
    }
}

/// Link devices: layer 1 joins type-I pairs within `r1`, layer 2 joins all
/// pairs within `r2`. Distances use the torus metric when the region wraps.
pub fn build_rgg(deployment: &Deployment, params: &NetworkParams, region: &Region) -> Result<MultiplexGraph> {
    params.validate()?;
    region.validate()?;
    let n = deployment.len();
    let mut adj1: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut adj2: Vec<Vec<u32>> = vec![Vec::new(); n];
    if n > 0 && params.r1 > 0.0 {
        let r1sq = params.r1 * params.r1;
        let r2sq = params.r2 * params.r2;
        let pos = &deployment.positions;
        let grid = CellGrid::new(pos, region, params.r1);
        for cell in 0..grid.nx * grid.ny {
            let here = grid.members(cell);
            if here.is_empty() {
                continue;
            }
            for other in grid.neighbourhood(cell) {
                for &i in here {
                    for &j in grid.members(other) {
                        if j <= i {
                            continue;
                        }
                        let (iu, ju) = (i as usize, j as usize);
                        let d2 = region.dist2(pos[iu], pos[ju]);
                        if d2 <= r2sq {
                            adj2[iu].push(j);
                            adj2[ju].push(i);
                        }
                        if d2 <= r1sq && deployment.types[iu] == DeviceType::I && deployment.types[ju] == DeviceType::I {
                            adj1[iu].push(j);
                            adj1[ju].push(i);
                        }
                    }
                }
            }
        }
        adj1.iter_mut().chain(adj2.iter_mut()).for_each(|list| list.sort_unstable());
    }
    Ok(MultiplexGraph {
        positions: deployment.positions.clone(),
        types: deployment.types.clone(),
        adj1,
        adj2,
        region: *region,
        seed: deployment.seed,
    })
}

/// Sample a deployment and link it in one go.
pub fn sample_graph(params: &NetworkParams, region: &Region, seed: u64) -> Result<MultiplexGraph> {
    let deployment = sample_ppp(params, region, seed)?;
    build_rgg(&deployment, params, region)
}

impl MultiplexGraph {
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn degree1(&self, node: usize) -> usize {
        self.adj1[node].len()
    }

    pub fn degree2(&self, node: usize) -> usize {
        self.adj2[node].len()
    }

    /// `|N1(x)| + |N2(x)|`; type-I neighbours within `r2` count twice.
    pub fn combined_degree(&self, node: usize) -> usize {
        self.degree1(node) + self.degree2(node)
    }

    pub fn count(&self, ty: DeviceType) -> usize {
        self.types.iter().filter(|&&t| t == ty).count()
    }

    /// Check symmetry, irreflexivity and the layer-1 type rule.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (layer, adj) in [(1, &self.adj1), (2, &self.adj2)] {
            for (u, list) in adj.iter().enumerate() {
                for &v in list {
                    let v = v as usize;
                    if v == u {
                        return Err(format!("layer {layer}: self loop at {u}"));
                    }
                    if adj[v].binary_search(&(u as u32)).is_err() {
                        return Err(format!("layer {layer}: edge {u}->{v} has no reverse"));
                    }
                    if layer == 1 && (self.types[u] != DeviceType::I || self.types[v] != DeviceType::I) {
                        return Err(format!("layer 1 edge {u}-{v} touches a type-II device"));
                    }
                }
            }
        }
        Ok(())
    }

    fn edges(adj: &[Vec<u32>]) -> Vec<[u32; 2]> {
        adj.iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v as usize > u).map(move |&v| [u as u32, v]))
            .collect()
    }

    pub fn dump(&self) -> GraphDump {
        GraphDump {
            seed: self.seed,
            region: self.region,
            positions: self.positions.clone(),
            types: self.types.clone(),
            layer1_edges: Self::edges(&self.adj1),
            layer2_edges: Self::edges(&self.adj2),
        }
    }
}

/// Serialized form of a graph: each undirected edge once as `[u, v]` with
/// `u < v`, in ascending order. Keys are emitted in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDump {
    pub seed: u64,
    pub region: Region,
    pub positions: Vec<[f64; 2]>,
    pub types: Vec<DeviceType>,
    pub layer1_edges: Vec<[u32; 2]>,
    pub layer2_edges: Vec<[u32; 2]>,
}

/// Degree histograms and means over all nodes of one graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDegrees {
    pub hist1: Vec<u64>,
    pub hist2: Vec<u64>,
    pub histc: Vec<u64>,
    pub mean1: f64,
    pub mean2: f64,
    pub meanc: f64,
    /// Counts of `(K1, K2)` pairs.
    pub joint_kl: BTreeMap<(usize, usize), u64>,
    pub nodes: usize,
}

fn histogram(values: impl Iterator<Item = usize>) -> Vec<u64> {
    let mut hist = Vec::new();
    for v in values {
        if v >= hist.len() {
            hist.resize(v + 1, 0);
        }
        hist[v] += 1;
    }
    hist
}

pub fn empirical_degrees(graph: &MultiplexGraph) -> Result<EmpiricalDegrees> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::NoData);
    }
    let hist1 = histogram((0..n).map(|i| graph.degree1(i)));
    let hist2 = histogram((0..n).map(|i| graph.degree2(i)));
    let histc = histogram((0..n).map(|i| graph.combined_degree(i)));
    let mean = |h: &[u64]| h.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum::<f64>() / n as f64;
    let mut joint_kl = BTreeMap::new();
    for i in 0..n {
        *joint_kl.entry((graph.degree1(i), graph.degree2(i))).or_insert(0) += 1;
    }
    Ok(EmpiricalDegrees {
        mean1: mean(&hist1),
        mean2: mean(&hist2),
        meanc: mean(&histc),
        hist1,
        hist2,
        histc,
        joint_kl,
        nodes: n,
    })
}

/// Normalize a histogram into frequencies.
pub fn normalize(hist: &[u64]) -> Vec<f64> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return vec![0.0; hist.len()];
    }
    hist.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Total-variation distance between two pmfs of possibly different length.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n)
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Fraction of nodes sampled uniformly that are type-I, and the count.
pub fn type1_fraction(graph: &MultiplexGraph) -> f64 {
    if graph.is_empty() {
        0.0
    } else {
        graph.count(DeviceType::I) as f64 / graph.node_count() as f64
    }
}
