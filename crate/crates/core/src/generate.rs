//! Random instance generators, generic over any [`rand::Rng`].

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Bundle, Instance, Partition};
use crate::numeric::{from_usize, int, Rational};

/// Integer valuations drawn uniformly from `0..=max_value`.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    agents: usize,
    goods: usize,
    max_value: i64,
) -> Result<Instance> {
    let rows = (0..agents)
        .map(|_| {
            (0..goods)
                .map(|_| int(rng.gen_range(0..=max_value)))
                .collect()
        })
        .collect();
    Instance::new(goods, rows)
}

/// An ordered, `d`-normalized instance together with one witnessing
/// partition per agent (every part is worth exactly 1 to its agent).
#[derive(Debug, Clone)]
pub struct NormalizedSample {
    pub instance: Instance,
    pub d: usize,
    pub partitions: Vec<Partition>,
}

/// Draws each agent's row independently: a random split of the goods into
/// `d` non-empty parts, random weights in `0..=max_weight` inside each part
/// (at least one positive), each part scaled to 1, then the row sorted.
pub fn random_normalized<R: Rng + ?Sized>(
    rng: &mut R,
    agents: usize,
    goods: usize,
    d: usize,
    max_weight: i64,
) -> Result<NormalizedSample> {
    if d == 0 {
        return Err(Error::ZeroBundles);
    }
    if goods < d {
        return Err(Error::InvalidParameters(alloc::format!(
            "{goods} goods cannot fill {d} non-empty parts"
        )));
    }
    if max_weight < 1 {
        return Err(Error::InvalidParameters(
            "max_weight must be positive".into(),
        ));
    }
    let mut rows = Vec::with_capacity(agents);
    let mut partitions = Vec::with_capacity(agents);
    let ground: Bundle = (0..goods).collect();
    for _ in 0..agents {
        let mut labels: Vec<usize> = (0..d).collect();
        labels.extend((d..goods).map(|_| rng.gen_range(0..d)));
        labels.shuffle(rng);
        let mut weights: Vec<i64> = (0..goods).map(|_| rng.gen_range(0..=max_weight)).collect();
        let mut sums = alloc::vec![0i64; d];
        for (g, &p) in labels.iter().enumerate() {
            sums[p] += weights[g];
        }
        for (p, sum) in sums.iter_mut().enumerate() {
            if *sum == 0 {
                let g = labels
                    .iter()
                    .position(|&l| l == p)
                    .expect("parts are non-empty");
                weights[g] = 1;
                *sum = 1;
            }
        }
        let values: Vec<Rational> = (0..goods)
            .map(|g| Rational::new(weights[g].into(), sums[labels[g]].into()))
            .collect();
        let mut order: Vec<usize> = (0..goods).collect();
        order.sort_by(|&a, &b| values[b].cmp(&values[a]));
        let mut parts = alloc::vec![Bundle::new(); d];
        for (pos, &g) in order.iter().enumerate() {
            parts[labels[g]].insert(pos);
        }
        rows.push(order.iter().map(|&g| values[g].clone()).collect());
        partitions.push(Partition::new(parts, &ground)?);
    }
    let instance = Instance::new(goods, rows)?;
    debug_assert!((0..agents).all(|a| instance.total_value(a) == from_usize(d)));
    Ok(NormalizedSample {
        instance,
        d,
        partitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bundle_value;
    use num_traits::One;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_instance_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = random_instance(&mut rng, 3, 7, 10).unwrap();
        assert_eq!((inst.agents(), inst.goods()), (3, 7));
        assert!(inst.rows().iter().flatten().all(|v| v <= &int(10)));
    }

    #[test]
    fn normalized_samples_are_witnessed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(1..=5);
            let m = rng.gen_range(n..=3 * n + 2);
            let s = random_normalized(&mut rng, n, m, n, 9).unwrap();
            assert!(s.instance.is_ordered());
            for (a, p) in s.partitions.iter().enumerate() {
                assert_eq!(p.d(), n);
                for part in p.parts() {
                    assert!(bundle_value(&s.instance, a, part).unwrap().is_one());
                }
            }
        }
    }

    #[test]
    fn rejects_impossible_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_normalized(&mut rng, 2, 2, 3, 5).is_err());
        assert!(random_normalized(&mut rng, 2, 2, 0, 5).is_err());
    }
}
