use alloc::vec::Vec;
use rand::Rng;

use super::Instance;
use crate::rng;

/// Parameters for [`generate_random`]. Out-of-range values are clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub nonhubs: usize,
    pub hubs: usize,
    /// Spoke lengths are drawn uniformly from `0..=ell_max`.
    pub ell_max: u64,
    /// Collection costs are drawn uniformly from `[0, c_max)`.
    pub c_max: f64,
    /// Positive demands are drawn uniformly from `(0, w_max]`.
    pub w_max: f64,
    /// Fraction of ordered non-hub pairs carrying positive demand.
    pub density: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            nonhubs: 4,
            hubs: 3,
            ell_max: 30,
            c_max: 10.0,
            w_max: 5.0,
            density: 0.7,
        }
    }
}

impl GeneratorConfig {
    fn clamped(&self) -> Self {
        let mut cfg = self.clone();
        if cfg.nonhubs == 0 {
            log::warn!("nonhubs = 0 clamped to 1");
            cfg.nonhubs = 1;
        }
        if cfg.hubs == 0 {
            log::warn!("hubs = 0 clamped to 1");
            cfg.hubs = 1;
        }
        if !(cfg.density >= 0.0 && cfg.density <= 1.0) {
            let d = if cfg.density > 1.0 { 1.0 } else { 0.0 };
            log::warn!("density {} clamped to {}", cfg.density, d);
            cfg.density = d;
        }
        if !(cfg.c_max.is_finite() && cfg.c_max >= 0.0) {
            log::warn!("c_max {} clamped to 0", cfg.c_max);
            cfg.c_max = 0.0;
        }
        if !(cfg.w_max.is_finite() && cfg.w_max >= 0.0) {
            log::warn!("w_max {} clamped to 0", cfg.w_max);
            cfg.w_max = 0.0;
        }
        cfg
    }
}

/// Draws a random valid instance; identical configs give identical instances.
pub fn generate_random(config: &GeneratorConfig) -> Instance {
    let cfg = config.clamped();
    let mut rng = rng::stream(cfg.seed);
    let (n, h) = (cfg.nonhubs, cfg.hubs);

    let mut ell: Vec<u64> = (0..h).map(|_| rng.random_range(0..=cfg.ell_max)).collect();
    ell.sort_unstable();
    let collection: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..h).map(|_| cfg.c_max * rng.random::<f64>()).collect())
        .collect();
    let flows: Vec<Vec<f64>> = (0..n)
        .map(|p| {
            (0..n)
                .map(|q| {
                    let carries = rng.random::<f64>() < cfg.density;
                    let amount = cfg.w_max * (1.0 - rng.random::<f64>());
                    if p != q && carries {
                        amount
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    Instance::new(ell, collection, flows).expect("generator produces valid instances")
}

/// Parameters for [`generate_ring`].
#[derive(Debug, Clone, PartialEq)]
pub struct RingConfig {
    pub seed: u64,
    pub nonhubs: usize,
    pub hubs: usize,
    /// Spoke lengths are drawn uniformly from `ell_min..=ell_max`.
    pub ell_min: u64,
    pub ell_max: u64,
    /// Collection costs at a non-hub's two preferred hubs lie in `[0, cheap_max)`.
    pub cheap_max: f64,
    /// Collection costs elsewhere lie in `[far_cost, 1.25 far_cost)`.
    pub far_cost: f64,
    /// Demands between ring neighbours lie in `[ring_w_min, ring_w_max)`.
    pub ring_w_min: f64,
    pub ring_w_max: f64,
    /// Other pairs carry demand in `[0, off_w_max)` with this probability.
    pub off_density: f64,
    pub off_w_max: f64,
}

impl Default for RingConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            nonhubs: 4,
            hubs: 3,
            ell_min: 2,
            ell_max: 10,
            cheap_max: 0.5,
            far_cost: 20.0,
            ring_w_min: 1.0,
            ring_w_max: 3.0,
            off_density: 0.3,
            off_w_max: 0.5,
        }
    }
}

/// Non-hubs on a ring, each cheap at two hubs shared with its neighbours
/// (`start + p` and `start + p + 1`, the last one closing back on `start`
/// when it can),
/// with heavy demand along the ring. The preferences conflict around the
/// ring, so the relaxation is often fractional.
pub fn generate_ring(config: &RingConfig) -> Instance {
    let mut cfg = config.clone();
    if cfg.nonhubs < 2 || cfg.hubs < 2 {
        log::warn!("ring needs at least 2 non-hubs and 2 hubs; clamped");
        cfg.nonhubs = cfg.nonhubs.max(2);
        cfg.hubs = cfg.hubs.max(2);
    }
    if cfg.ell_min > cfg.ell_max {
        log::warn!("ell_min {} above ell_max {}; swapped", cfg.ell_min, cfg.ell_max);
        core::mem::swap(&mut cfg.ell_min, &mut cfg.ell_max);
    }
    let mut rng = rng::stream(cfg.seed);
    let (n, h) = (cfg.nonhubs, cfg.hubs);
    let mut ell: Vec<u64> = (0..h).map(|_| rng.random_range(cfg.ell_min..=cfg.ell_max)).collect();
    ell.sort_unstable();
    let start = rng.random_range(0..h);
    let collection: Vec<Vec<f64>> = (0..n)
        .map(|p| {
            let a = (start + p) % h;
            let b = if p + 1 == n && a != start { start } else { (a + 1) % h };
            (0..h)
                .map(|i| {
                    let u = rng.random::<f64>();
                    if i == a || i == b {
                        cfg.cheap_max * u
                    } else {
                        cfg.far_cost * (1.0 + 0.25 * u)
                    }
                })
                .collect()
        })
        .collect();
    let flows: Vec<Vec<f64>> = (0..n)
        .map(|p| {
            (0..n)
                .map(|q| {
                    let (u, v) = (rng.random::<f64>(), rng.random::<f64>());
                    if p == q {
                        0.0
                    } else if q == (p + 1) % n || p == (q + 1) % n {
                        cfg.ring_w_min + (cfg.ring_w_max - cfg.ring_w_min) * u
                    } else if v < cfg.off_density {
                        cfg.off_w_max * u
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Instance::new(ell, collection, flows).expect("ring generator produces valid instances")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let cfg = GeneratorConfig {
            seed: 99,
            ..Default::default()
        };
        assert_eq!(generate_random(&cfg), generate_random(&cfg));
        let other = GeneratorConfig { seed: 100, ..cfg };
        assert_ne!(generate_random(&other), generate_random(&cfg));
    }

    #[test]
    fn degenerate_sizes_are_clamped() {
        let inst = generate_random(&GeneratorConfig {
            seed: 1,
            nonhubs: 0,
            hubs: 0,
            density: 3.0,
            ..Default::default()
        });
        assert_eq!(inst.nonhub_count(), 1);
        assert_eq!(inst.hub_count(), 1);
        assert_eq!(inst.flow(0, 0), 0.0);
    }

    #[test]
    fn spokes_sorted_and_bounded() {
        let inst = generate_random(&GeneratorConfig {
            seed: 7,
            nonhubs: 5,
            hubs: 4,
            ..Default::default()
        });
        let ell = inst.spoke_lengths();
        assert!(ell.windows(2).all(|w| w[0] <= w[1]));
        assert!(ell.iter().all(|&l| l <= 30));
    }

    #[test]
    fn ring_is_deterministic_and_bounded() {
        let cfg = RingConfig {
            seed: 5,
            nonhubs: 5,
            hubs: 4,
            ..Default::default()
        };
        let inst = generate_ring(&cfg);
        assert_eq!(inst, generate_ring(&cfg));
        assert!(inst.spoke_lengths().iter().all(|&l| (2..=10).contains(&l)));
        for p in 0..5 {
            let cheap = (0..4).filter(|&i| inst.collection_cost(p, i) < 0.5).count();
            assert_eq!(cheap, 2);
            assert!(inst.flow(p, (p + 1) % 5) >= 1.0);
        }
    }
}
