use idtnet::dynamics::*;
use idtnet::netgen::*;
use idtnet::oracle::*;

// Synchronous heat-bath hop applied to a distribution vector.
fn sync_apply(g: &Graph, p: &DynamicsParams, v: &[f64]) -> Vec<f64> {
    let n = g.node_count();
    let dim = 1usize << n;
    let mut out = vec![0.0; dim];
    // per-state per-site up probabilities
    for x in 0..dim {
        if v[x] == 0.0 { continue; }
        let ups: Vec<f64> = (0..n)
            .map(|i| {
                let s: i64 = g.neighbors(i).iter()
                    .map(|&j| if x >> j & 1 == 1 { 1i64 } else { -1 }).sum();
                glauber_up_probability(s, p)
            })
            .collect();
        for y in 0..dim {
            let mut w = v[x];
            for (i, up) in ups.iter().enumerate() {
                w *= if y >> i & 1 == 1 { *up } else { 1.0 - up };
                if w == 0.0 { break; }
            }
            out[y] += w;
        }
    }
    out
}

fn backflow_sync_branch(k_leaves: usize, t: f64, branch: bool) -> f64 {
    let g = Graph::star(k_leaves);
    let n = k_leaves + 1;
    let p = DynamicsParams::new(1.0, t, UpdateRule::Glauber).unwrap();
    let pi = boltzmann_distribution(&g, &p).unwrap();
    let dim = 1usize << n;
    let mut wm = vec![0.0f64; dim];
    let mut wp = vec![0.0f64; dim];
    let mut z = 0.0;
    for x in 0..dim {
        let m: i64 = (0..n).map(|i| if x >> i & 1 == 1 { 1i64 } else { -1 }).sum();
        if !branch || m > 0 {
            if x & 1 == 1 { wp[x] = pi.probs()[x]; } else { wm[x] = pi.probs()[x]; }
            z += pi.probs()[x];
        }
    }
    for v in wm.iter_mut().chain(wp.iter_mut()) { *v /= z; }
    for _ in 0..2 {
        wm = sync_apply(&g, &p, &wm);
        wp = sync_apply(&g, &p, &wp);
    }
    let leaf_dim = dim >> 1;
    let mut cells = vec![[[0.0f64; 2]; 2]; leaf_dim];
    for y in 0..dim {
        let c = y & 1;
        let b = y >> 1;
        cells[b][0][c] += wm[y];
        cells[b][1][c] += wp[y];
    }
    let mut cmi = 0.0;
    for cell in &cells {
        let pb: f64 = cell.iter().flatten().sum();
        if pb <= 0.0 { continue; }
        for a in 0..2 {
            for c in 0..2 {
                let pac = cell[a][c];
                if pac <= 0.0 { continue; }
                let pa = cell[a][0] + cell[a][1];
                let pc = cell[0][c] + cell[1][c];
                cmi += pac * (pac * pb / (pa * pc)).log2();
            }
        }
    }
    cmi
}

fn main() {
    for t in [1.2, 1.5, 2.0, 3.0] {
        print!("T={t} sync+branch: ");
        for k in [2usize, 4, 6, 8, 10] {
            print!("k{k}={:.6} ", backflow_sync_branch(k, t, true));
        }
        println!();
        print!("T={t} sync+symm:   ");
        for k in [2usize, 4, 6, 8, 10] {
            print!("k{k}={:.6} ", backflow_sync_branch(k, t, false));
        }
        println!();
    }
}
