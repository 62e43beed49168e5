//! Matrix-free application of
//! `H = s·diag + Σ_i (z_i σ^z_i + x_i σ^x_i + y_i σ^y_i)`.
//!
//! States use a split layout: `y[..dim]` real parts, `y[dim..]` imaginary
//! parts, which keeps the pair loops contiguous and vectorisable.

/// Per-site field coefficients multiplying `σ^z_i`, `σ^x_i`, `σ^y_i`.
#[derive(Debug, Clone)]
pub struct SiteFields {
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SiteFields {
    pub fn zeros(n: usize) -> Self {
        Self { z: vec![0.0; n], x: vec![0.0; n], y: vec![0.0; n] }
    }
}

/// Sites whose pair distance is below `1 << TILE_BITS` are handled in one
/// fused pass over small tiles together with the diagonal.
const TILE_BITS: usize = 3;

/// `dy = -i H y`.
pub fn apply_minus_i_h(n: usize, diag: &[f64], diag_scale: f64, fields: &SiteFields, y: &[f64], dy: &mut [f64]) {
    let dim = 1usize << n;
    debug_assert_eq!(y.len(), 2 * dim);
    let (yr, yi) = y.split_at(dim);
    let (dr, di) = dy.split_at_mut(dim);

    let tile_bits = TILE_BITS.min(n);
    match tile_bits {
        3 => diag_and_low_sites::<8>(n, diag, diag_scale, fields, yr, yi, dr, di),
        2 => diag_and_low_sites::<4>(n, diag, diag_scale, fields, yr, yi, dr, di),
        1 => diag_and_low_sites::<2>(n, diag, diag_scale, fields, yr, yi, dr, di),
        _ => unreachable!("n >= 1"),
    }

    for site in 0..n - tile_bits {
        let (pz, px, py) = (fields.z[site], fields.x[site], fields.y[site]);
        if pz == 0.0 && px == 0.0 && py == 0.0 {
            continue;
        }
        let m = 1usize << (n - 1 - site);
        let blocks = yr
            .chunks_exact(2 * m)
            .zip(yi.chunks_exact(2 * m))
            .zip(dr.chunks_exact_mut(2 * m))
            .zip(di.chunks_exact_mut(2 * m));
        for (((br, bi), or), oi) in blocks {
            let (lr, hr) = br.split_at(m);
            let (li, hi) = bi.split_at(m);
            let (olr, ohr) = or.split_at_mut(m);
            let (oli, ohi) = oi.split_at_mut(m);
            for k in 0..m {
                let (ar, ai, br, bi) = (lr[k], li[k], hr[k], hi[k]);
                // lower half is spin up (σ^z = +1), upper half spin down
                let lo_re = pz * ar + px * br + py * bi;
                let lo_im = pz * ai + px * bi - py * br;
                let hi_re = -pz * br + px * ar - py * ai;
                let hi_im = -pz * bi + px * ai + py * ar;
                olr[k] += lo_im;
                oli[k] -= lo_re;
                ohr[k] += hi_im;
                ohi[k] -= hi_re;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn diag_and_low_sites<const T: usize>(
    n: usize,
    diag: &[f64],
    diag_scale: f64,
    fields: &SiteFields,
    yr: &[f64],
    yi: &[f64],
    dr: &mut [f64],
    di: &mut [f64],
) {
    let bits = T.trailing_zeros() as usize;
    // (pz, px, py) of the sites with pair distance 1, 2, 4
    let mut local = [(0.0, 0.0, 0.0); 3];
    for (k, slot) in local.iter_mut().enumerate().take(bits) {
        let site = n - 1 - k;
        *slot = (fields.z[site], fields.x[site], fields.y[site]);
    }
    let tiles = yr
        .chunks_exact(T)
        .zip(yi.chunks_exact(T))
        .zip(diag.chunks_exact(T))
        .zip(dr.chunks_exact_mut(T).zip(di.chunks_exact_mut(T)));
    for (((ar, ai), e), (or, oi)) in tiles {
        let ar: &[f64; T] = ar.try_into().expect("tile");
        let ai: &[f64; T] = ai.try_into().expect("tile");
        let mut hr = [0.0; T];
        let mut hi = [0.0; T];
        for k in 0..T {
            let e = diag_scale * e[k];
            hr[k] = e * ar[k];
            hi[k] = e * ai[k];
        }
        if bits > 0 {
            tile_site::<T, 1>(local[0], ar, ai, &mut hr, &mut hi);
        }
        if bits > 1 {
            tile_site::<T, 2>(local[1], ar, ai, &mut hr, &mut hi);
        }
        if bits > 2 {
            tile_site::<T, 4>(local[2], ar, ai, &mut hr, &mut hi);
        }
        for k in 0..T {
            or[k] = hi[k];
            oi[k] = -hr[k];
        }
    }
}

#[inline(always)]
fn tile_site<const T: usize, const M: usize>(
    (pz, px, py): (f64, f64, f64),
    ar: &[f64; T],
    ai: &[f64; T],
    hr: &mut [f64; T],
    hi: &mut [f64; T],
) {
    for base in (0..T).step_by(2 * M) {
        for lo in base..base + M {
            let up = lo + M;
            let (a_r, a_i, b_r, b_i) = (ar[lo], ai[lo], ar[up], ai[up]);
            hr[lo] += pz * a_r + px * b_r + py * b_i;
            hi[lo] += pz * a_i + px * b_i - py * b_r;
            hr[up] += -pz * b_r + px * a_r - py * a_i;
            hi[up] += -pz * b_i + px * a_i + py * a_r;
        }
    }
}
