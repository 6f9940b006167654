//! CMC and mAP for a toy re-identification model: identities are points in a
//! feature space, each image is a noisy copy, and distances are Euclidean.
//!
//!     cargo run --example reid_metrics -- [noise]

use pedsynth::evalkit::{evaluate, DistanceMatrix, EvalInput, Labels, DEFAULT_MAX_RANK};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;

const DIM: usize = 16;

fn main() -> pedsynth::Result<()> {
    let noise: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.8);
    let mut rng = Xoshiro256StarStar::seed_from_u64(1);
    let ids = 50;
    let centers: Vec<Vec<f64>> = (0..ids)
        .map(|_| (0..DIM).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let draw = |id: usize, rng: &mut Xoshiro256StarStar| -> Vec<f64> {
        centers[id].iter().map(|c| c + noise * rng.sample::<f64, _>(StandardNormal)).collect()
    };

    // one query per id from camera 1, four gallery images per id over cameras 1 to 4
    let (mut q_feat, mut q_ids, mut q_cams) = (Vec::new(), Vec::new(), Vec::new());
    let (mut g_feat, mut g_ids, mut g_cams) = (Vec::new(), Vec::new(), Vec::new());
    for id in 0..ids {
        q_feat.push(draw(id, &mut rng));
        q_ids.push(id as u32 + 1);
        q_cams.push(1);
        for cam in 1..=4 {
            g_feat.push(draw(id, &mut rng));
            g_ids.push(id as u32 + 1);
            g_cams.push(cam);
        }
    }
    let data = q_feat
        .iter()
        .flat_map(|q| {
            g_feat
                .iter()
                .map(move |g| q.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        })
        .collect();

    let input = EvalInput {
        distmat: DistanceMatrix::new(q_feat.len(), g_feat.len(), data)?,
        query: Labels::new(q_ids, q_cams)?,
        gallery: Labels::new(g_ids, g_cams)?,
    };
    let result = evaluate(&input, DEFAULT_MAX_RANK)?;
    println!("noise {noise}: {}", result.summary());
    println!("valid queries {} invalid {}", result.valid_queries, result.invalid_queries);
    Ok(())
}
