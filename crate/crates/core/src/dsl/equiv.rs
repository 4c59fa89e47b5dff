use super::{eval, Program};
use crate::world::{Color, Hand, ObjectFacts, Shape, SymbolicState, CELLS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// A source of random symbolic states for comparing programs.
pub trait StateSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> SymbolicState;
}

/// Two to seven objects with independent shapes, sizes, colours and cells. Half the draws use
/// a palette of two or three colours so that colour counts collide and differ.
#[derive(Clone, Debug)]
pub struct BroadSampler {
    pub min_objects: usize,
    pub max_objects: usize,
}

impl Default for BroadSampler {
    fn default() -> Self {
        BroadSampler {
            min_objects: 2,
            max_objects: 7,
        }
    }
}

pub(crate) fn random_shape(rng: &mut impl Rng) -> Shape {
    match rng.gen_range(0..4) {
        0 => Shape::Circle {
            radius: rng.gen_range(0.025..0.07),
        },
        1 => {
            let s = rng.gen_range(0.04..0.12);
            Shape::Box {
                width: s,
                height: s,
            }
        }
        2 => Shape::Box {
            width: rng.gen_range(0.04..0.13),
            height: rng.gen_range(0.04..0.13),
        },
        _ => Shape::Triangle {
            side: rng.gen_range(0.05..0.14),
        },
    }
}

impl StateSampler for BroadSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> SymbolicState {
        let n = rng.gen_range(self.min_objects..=self.max_objects);
        let palette: Vec<Color> = if rng.gen_bool(0.5) {
            let k = rng.gen_range(2..=3);
            let mut p = Color::ALL.to_vec();
            for i in 0..k {
                let j = rng.gen_range(i..p.len());
                p.swap(i, j);
            }
            p.truncate(k);
            p
        } else {
            Color::ALL.to_vec()
        };
        let objects: Vec<ObjectFacts> = (0..n)
            .map(|i| {
                let shape = random_shape(rng);
                ObjectFacts {
                    id: i as u32 + 1,
                    color: palette[rng.gen_range(0..palette.len())],
                    shape,
                    area: shape.area(),
                    perimeter: shape.perimeter(),
                    extent: shape.extent(),
                }
            })
            .collect();
        let atoms = (0..n)
            .map(|_| CELLS[rng.gen_range(0..CELLS.len())])
            .collect();
        SymbolicState {
            objects: Arc::new(objects),
            atoms,
            hand: Hand::Empty,
        }
    }
}

/// Do the programs ground identically on `n` seeded samples? Two errors count as agreement.
pub fn extensional_equiv(
    e1: &Program,
    e2: &Program,
    sampler: &dyn StateSampler,
    n: usize,
    seed: u64,
) -> bool {
    if e1 == e2 {
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n.max(1)).all(|_| {
        let s = sampler.sample(&mut rng);
        match (eval(e1, &s), eval(e2, &s)) {
            (Ok(a), Ok(b)) => a == b,
            (Err(_), Err(_)) => true,
            _ => false,
        }
    })
}
