//! CMC and mAP under the single-query, cross-camera protocol.
//!
//! Gallery items sharing both identity and camera with the query are
//! ignored. Ties in distance are broken by gallery index.

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_RANK: usize = 50;

/// Row-major query × gallery distances; smaller is more similar.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::Validation(format!(
                "distance matrix {rows}x{cols} needs {} values, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        Ok(DistanceMatrix { rows, cols, data })
    }

    pub fn row(&self, q: usize) -> &[f64] {
        &self.data[q * self.cols..(q + 1) * self.cols]
    }

    /// Two little-endian `u64` dimensions followed by the `f64` values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.data.len());
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(Error::Validation("distance matrix file shorter than its header".into()));
        }
        let dim = |k: usize| u64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes")) as usize;
        let (rows, cols) = (dim(0), dim(8));
        let body = &bytes[16..];
        if rows.checked_mul(cols).and_then(|n| n.checked_mul(8)) != Some(body.len()) {
            return Err(Error::Validation(format!(
                "distance matrix header says {rows}x{cols} but body holds {} bytes",
                body.len()
            )));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        DistanceMatrix::new(rows, cols, data)
    }
}

pub fn read_distmat(path: &Path) -> Result<DistanceMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    DistanceMatrix::from_bytes(&bytes)
}

pub fn write_distmat(path: &Path, m: &DistanceMatrix) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&m.to_bytes()).map_err(|e| Error::io(path, e))
}

/// Identity and camera of each row of an `id,cam` CSV.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Labels {
    pub ids: Vec<u32>,
    pub cams: Vec<u32>,
}

impl Labels {
    pub fn new(ids: Vec<u32>, cams: Vec<u32>) -> Result<Self> {
        if ids.len() != cams.len() {
            return Err(Error::Validation(format!("{} ids but {} cams", ids.len(), cams.len())));
        }
        if let Some(i) = ids.iter().position(|id| *id == 0) {
            return Err(Error::Validation(format!("row {i}: identity ids must be positive")));
        }
        Ok(Labels { ids, cams })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.iter().ne(["id", "cam"]) {
            return Err(Error::parse(1, "label header must be `id,cam`"));
        }
        let (mut ids, mut cams) = (Vec::new(), Vec::new());
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let get = |k: usize| -> Result<u32> {
                rec.get(k)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::parse(i + 2, "expected non-negative integers"))
            };
            ids.push(get(0)?);
            cams.push(get(1)?);
        }
        Labels::new(ids, cams)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,cam\n");
        for (i, c) in self.ids.iter().zip(&self.cams) {
            s.push_str(&format!("{i},{c}\n"));
        }
        s
    }
}

pub fn read_labels(path: &Path) -> Result<Labels> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Labels::parse_csv(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalInput {
    pub distmat: DistanceMatrix,
    pub query: Labels,
    pub gallery: Labels,
}

impl EvalInput {
    pub fn validate(&self) -> Result<()> {
        let d = &self.distmat;
        if d.rows != self.query.len() || d.cols != self.gallery.len() {
            return Err(Error::Validation(format!(
                "distance matrix is {}x{} but there are {} queries and {} gallery items",
                d.rows,
                d.cols,
                self.query.len(),
                self.gallery.len()
            )));
        }
        if let Some(i) = d.data.iter().position(|v| v.is_nan()) {
            return Err(Error::Validation(format!(
                "distance ({}, {}) is NaN",
                i / d.cols.max(1),
                i % d.cols.max(1)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvalResult {
    /// `cmc[k - 1]` is the rank-k accuracy.
    pub cmc: Vec<f64>,
    pub map: f64,
    pub valid_queries: usize,
    pub invalid_queries: usize,
}

impl EvalResult {
    /// Rank-k accuracy; ranks past the computed curve repeat its last value.
    pub fn rank(&self, k: usize) -> f64 {
        assert!(k >= 1, "ranks start at 1");
        self.cmc.get(k - 1).or(self.cmc.last()).copied().unwrap_or(0.0)
    }

    /// `rank-1 R1 rank-5 R5 rank-10 R10 mAP M` in percent.
    pub fn summary(&self) -> String {
        format!(
            "rank-1 {} rank-5 {} rank-10 {} mAP {}",
            percent(self.rank(1)),
            percent(self.rank(5)),
            percent(self.rank(10)),
            percent(self.map)
        )
    }
}

/// Percentage with one decimal, halves rounded up.
pub fn percent(x: f64) -> String {
    // the nudge keeps decimal halves such as 0.0125 from landing just below .5
    let tenths = (x * 1000.0 + 0.5 + 1e-9).floor();
    format!("{:.1}", tenths / 10.0)
}

/// Positions (0-based, after filtering) of the true matches of one query.
fn match_ranks(row: &[f64], qid: u32, qcam: u32, gallery: &Labels) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
    let mut rank = 0;
    let mut out = Vec::new();
    for g in order {
        let (gid, gcam) = (gallery.ids[g], gallery.cams[g]);
        if gid == qid && gcam == qcam {
            continue;
        }
        if gid == qid {
            out.push(rank);
        }
        rank += 1;
    }
    out
}

fn average_precision(ranks: &[usize]) -> f64 {
    ranks
        .iter()
        .enumerate()
        .map(|(i, r)| (i + 1) as f64 / (r + 1) as f64)
        .sum::<f64>()
        / ranks.len() as f64
}

pub fn evaluate(input: &EvalInput, max_rank: usize) -> Result<EvalResult> {
    input.validate()?;
    if max_rank == 0 {
        return Err(Error::Validation("max rank must be at least 1".into()));
    }
    let per_query: Vec<Option<(usize, f64)>> = (0..input.distmat.rows)
        .into_par_iter()
        .map(|q| {
            let ranks = match_ranks(
                input.distmat.row(q),
                input.query.ids[q],
                input.query.cams[q],
                &input.gallery,
            );
            (!ranks.is_empty()).then(|| (ranks[0], average_precision(&ranks)))
        })
        .collect();
    let valid: Vec<(usize, f64)> = per_query.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::Validation("no query has a valid gallery match".into()));
    }
    let n = valid.len() as f64;
    let mut hits = vec![0usize; max_rank];
    for (first, _) in &valid {
        if *first < max_rank {
            hits[*first] += 1;
        }
    }
    let mut cmc = Vec::with_capacity(max_rank);
    let mut acc = 0;
    for h in hits {
        acc += h;
        cmc.push(acc as f64 / n);
    }
    Ok(EvalResult {
        cmc,
        map: valid.iter().map(|(_, ap)| ap).sum::<f64>() / n,
        valid_queries: valid.len(),
        invalid_queries: per_query.len() - valid.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn input(d: Vec<Vec<f64>>, q: (Vec<u32>, Vec<u32>), g: (Vec<u32>, Vec<u32>)) -> EvalInput {
        let rows = d.len();
        let cols = d.first().map_or(0, Vec::len);
        EvalInput {
            distmat: DistanceMatrix::new(rows, cols, d.concat()).unwrap(),
            query: Labels::new(q.0, q.1).unwrap(),
            gallery: Labels::new(g.0, g.1).unwrap(),
        }
    }

    #[test]
    fn nearest_match_is_perfect() {
        let r = evaluate(&input(vec![vec![0.1, 0.5]], (vec![1], vec![0]), (vec![1, 2], vec![1, 1])), 10).unwrap();
        assert_eq!((r.rank(1), r.map), (1.0, 1.0));
    }

    #[test]
    fn matches_at_ranks_two_and_three() {
        let r = evaluate(
            &input(vec![vec![0.1, 0.2, 0.3]], (vec![1], vec![0]), (vec![2, 1, 1], vec![1, 1, 1])),
            10,
        )
        .unwrap();
        assert!((r.map - (0.5 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!((r.rank(1), r.rank(2), r.rank(10)), (0.0, 1.0, 1.0));
    }

    #[test]
    fn same_camera_match_is_excluded() {
        let d = vec![vec![0.1, 0.2], vec![0.3, 0.1]];
        let r = evaluate(&input(d, (vec![1, 2], vec![0, 0]), (vec![1, 2], vec![0, 1])), 5).unwrap();
        assert_eq!((r.valid_queries, r.invalid_queries), (1, 1));
        assert_eq!((r.rank(1), r.map), (1.0, 1.0));
        // different id on the same camera still counts as a distractor
        let d = vec![vec![0.1, 0.2]];
        let r = evaluate(&input(d, (vec![1], vec![0]), (vec![2, 1], vec![0, 1])), 5).unwrap();
        assert_eq!(r.rank(1), 0.0);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let d = vec![vec![0.5, 0.5]];
        let a = evaluate(&input(d.clone(), (vec![1], vec![0]), (vec![1, 2], vec![1, 1])), 5).unwrap();
        let b = evaluate(&input(d, (vec![1], vec![0]), (vec![2, 1], vec![1, 1])), 5).unwrap();
        assert_eq!((a.map, b.map), (1.0, 0.5));
    }

    #[test]
    fn errors() {
        let bad = EvalInput {
            distmat: DistanceMatrix::new(1, 2, vec![0.0, 1.0]).unwrap(),
            query: Labels::new(vec![1], vec![0]).unwrap(),
            gallery: Labels::new(vec![1, 2, 3], vec![1, 1, 1]).unwrap(),
        };
        assert!(matches!(evaluate(&bad, 5), Err(Error::Validation(_))));
        let none = input(vec![vec![0.1]], (vec![1], vec![0]), (vec![1], vec![0]));
        assert!(matches!(evaluate(&none, 5), Err(Error::Validation(_))));
        assert!(Labels::new(vec![0], vec![1]).is_err());
        assert!(DistanceMatrix::new(2, 2, vec![0.0]).is_err());
    }

    #[test]
    fn summary_rounding() {
        assert_eq!(percent(0.58333), "58.3");
        assert_eq!(percent(0.0125), "1.3");
        assert_eq!(percent(0.01249), "1.2");
        assert_eq!(percent(1.0), "100.0");
        let r = EvalResult { cmc: vec![0.5, 0.75], map: 0.4, valid_queries: 4, invalid_queries: 0 };
        assert_eq!(r.summary(), "rank-1 50.0 rank-5 75.0 rank-10 75.0 mAP 40.0");
    }

    #[test]
    fn file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let m = DistanceMatrix::new(2, 3, vec![0.5, 1.0, -2.0, 3.25, f64::MAX, 0.0]).unwrap();
        let p = dir.path().join("d.bin");
        write_distmat(&p, &m).unwrap();
        assert_eq!(read_distmat(&p).unwrap(), m);
        assert!(DistanceMatrix::from_bytes(&m.to_bytes()[..20]).is_err());
        let l = Labels::new(vec![3, 4], vec![0, 1]).unwrap();
        assert_eq!(Labels::parse_csv(&l.to_csv()).unwrap(), l);
    }

    /// Direct transcription of the definitions: for every position, count
    /// valid items ranked at or before it by scanning the whole gallery.
    fn oracle(inp: &EvalInput) -> (Vec<f64>, f64) {
        let g = inp.gallery.len();
        let mut aps = Vec::new();
        let mut firsts = Vec::new();
        for q in 0..inp.query.len() {
            let row = inp.distmat.row(q);
            let (qid, qcam) = (inp.query.ids[q], inp.query.cams[q]);
            let valid = |j: usize| !(inp.gallery.ids[j] == qid && inp.gallery.cams[j] == qcam);
            let before = |a: usize, b: usize| row[a] < row[b] || (row[a] == row[b] && a < b);
            let rank_of = |j: usize| (0..g).filter(|&k| valid(k) && before(k, j)).count() + 1;
            let matches: Vec<usize> = (0..g).filter(|&j| valid(j) && inp.gallery.ids[j] == qid).collect();
            if matches.is_empty() {
                continue;
            }
            let mut precisions = Vec::new();
            for &m in &matches {
                let r = rank_of(m);
                let hits = matches.iter().filter(|&&o| rank_of(o) <= r).count();
                precisions.push(hits as f64 / r as f64);
            }
            aps.push(precisions.iter().sum::<f64>() / precisions.len() as f64);
            firsts.push(matches.iter().map(|&m| rank_of(m)).min().unwrap());
        }
        let n = aps.len() as f64;
        let cmc = (1..=g).map(|k| firsts.iter().filter(|&&f| f <= k).count() as f64 / n).collect();
        (cmc, aps.iter().sum::<f64>() / n)
    }

    fn random_input(seed: u64, q: usize, g: usize, ties: bool) -> EvalInput {
        let mut rng = rand_xoshiro::Xoshiro256StarStar::seed_from_u64(seed);
        let data = (0..q * g)
            .map(|_| if ties { rng.gen_range(0..5) as f64 } else { rng.gen::<f64>() })
            .collect();
        let ids = |n: usize, rng: &mut rand_xoshiro::Xoshiro256StarStar| (0..n).map(|_| rng.gen_range(1..8)).collect();
        let cams = |n: usize, rng: &mut rand_xoshiro::Xoshiro256StarStar| (0..n).map(|_| rng.gen_range(0..3)).collect();
        let qi = ids(q, &mut rng);
        let qc = cams(q, &mut rng);
        let gi = ids(g, &mut rng);
        let gc = cams(g, &mut rng);
        EvalInput {
            distmat: DistanceMatrix::new(q, g, data).unwrap(),
            query: Labels::new(qi, qc).unwrap(),
            gallery: Labels::new(gi, gc).unwrap(),
        }
    }

    #[test]
    fn agrees_with_brute_force() {
        for seed in 0..40 {
            let inp = random_input(seed, 20, 50, seed % 2 == 0);
            let r = evaluate(&inp, 50).unwrap();
            let (cmc, map) = oracle(&inp);
            assert!((r.map - map).abs() <= 1e-12, "seed {seed}: {} vs {map}", r.map);
            for (a, b) in r.cmc.iter().zip(&cmc) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn cmc_is_monotone(seed in any::<u64>()) {
            let r = evaluate(&random_input(seed, 10, 30, false), 30).unwrap();
            prop_assert!(r.cmc.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(*r.cmc.last().unwrap() <= 1.0);
            prop_assert!((0.0..=1.0).contains(&r.map));
        }

        #[test]
        fn monotone_transform_invariant(seed in any::<u64>()) {
            let inp = random_input(seed, 10, 30, true);
            let mut t = inp.clone();
            t.distmat.data.iter_mut().for_each(|v| *v = (3.0 * *v).exp() - 7.0);
            prop_assert_eq!(evaluate(&inp, 30).unwrap(), evaluate(&t, 30).unwrap());
        }

        #[test]
        fn gallery_permutation_invariant(seed in any::<u64>(), shift in 1usize..29) {
            let inp = random_input(seed, 10, 30, false);
            let g = inp.gallery.len();
            let perm: Vec<usize> = (0..g).map(|j| (j + shift) % g).collect();
            let mut p = inp.clone();
            for q in 0..inp.distmat.rows {
                for (j, &src) in perm.iter().enumerate() {
                    p.distmat.data[q * g + j] = inp.distmat.data[q * g + src];
                }
            }
            p.gallery.ids = perm.iter().map(|&s| inp.gallery.ids[s]).collect();
            p.gallery.cams = perm.iter().map(|&s| inp.gallery.cams[s]).collect();
            let (a, b) = (evaluate(&inp, 30).unwrap(), evaluate(&p, 30).unwrap());
            prop_assert!((a.map - b.map).abs() < 1e-12);
            prop_assert_eq!(a.cmc, b.cmc);
        }
    }
}
