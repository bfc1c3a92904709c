//! Row sampling helpers shared by the solvers and the experiment runner.

use rand::seq::index;

use crate::rng::Rng;

/// `size` distinct indices from `0..n`, sorted.
pub fn uniform_indices(n: usize, size: usize, rng: &mut Rng) -> Vec<usize> {
    let mut idx = index::sample(rng, n, size.min(n)).into_vec();
    idx.sort_unstable();
    idx
}

/// Split `size` slots over classes with `counts` members: every class first
/// gets `min(count, floor)`, the rest is shared proportionally to class size
/// by largest remainder, never exceeding a class's count.
pub fn allocate(counts: &[usize], size: usize, floor: usize) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let size = size.min(total);
    let mut alloc: Vec<usize> = counts.iter().map(|&c| c.min(floor)).collect();
    let mut assigned: usize = alloc.iter().sum();
    if assigned > size {
        // Floors alone overshoot: trim from the largest allocations.
        while assigned > size {
            let j = (0..alloc.len()).max_by_key(|&j| (alloc[j], std::cmp::Reverse(j))).unwrap();
            alloc[j] -= 1;
            assigned -= 1;
        }
        return alloc;
    }
    while assigned < size {
        let remaining = size - assigned;
        let cap: Vec<usize> = counts.iter().zip(&alloc).map(|(c, a)| c - a).collect();
        let cap_total: usize = cap.iter().sum();
        let mut shares: Vec<(usize, f64)> = Vec::new();
        let mut given = 0;
        for (j, &c) in cap.iter().enumerate() {
            let exact = remaining as f64 * c as f64 / cap_total as f64;
            let whole = (exact.floor() as usize).min(c);
            alloc[j] += whole;
            given += whole;
            shares.push((j, exact - whole as f64));
        }
        assigned += given;
        shares.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (j, _) in shares {
            if assigned == size {
                break;
            }
            if alloc[j] < counts[j] {
                alloc[j] += 1;
                assigned += 1;
            }
        }
    }
    alloc
}

/// Class-stratified sample of about `size` rows. Each sampled row of class
/// `c` is weighted `n_c / s_c`, so weighted class totals match the data.
/// Classes are the distinct label values in ascending order.
pub fn stratified_sample(labels: &[f64], size: usize, floor: usize, rng: &mut Rng) -> Vec<(usize, f64)> {
    let mut classes: Vec<f64> = labels.to_vec();
    classes.sort_by(f64::total_cmp);
    classes.dedup();
    let members: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| (0..labels.len()).filter(|&i| labels[i] == *c).collect())
        .collect();
    let counts: Vec<usize> = members.iter().map(Vec::len).collect();
    let alloc = allocate(&counts, size, floor);
    let mut out = Vec::with_capacity(size);
    for (m, &s) in members.iter().zip(&alloc) {
        if s == 0 {
            continue;
        }
        let w = m.len() as f64 / s as f64;
        for j in uniform_indices(m.len(), s, rng) {
            out.push((m[j], w));
        }
    }
    out.sort_by_key(|p| p.0);
    out
}
