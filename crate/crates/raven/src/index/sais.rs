//! Linear-time suffix array construction (SA-IS).
//!
//! Operates over u32 sequences whose final element is the unique minimum of
//! the sequence (the caller's terminal sentinel). Induced sorting with
//! recursion on the reduced LMS string; the reduced string always ends with
//! the sentinel's name, which is again its unique minimum.

const EMPTY: u32 = u32::MAX;

/// Suffix array of `text`. Requires `text[text.len() - 1]` to be strictly
/// smaller than every other element.
pub(crate) fn suffix_array(text: &[u32]) -> Vec<u32> {
    let n = text.len();
    match n {
        0 => return Vec::new(),
        1 => return vec![0],
        _ => {}
    }
    debug_assert!(
        text[..n - 1].iter().all(|&c| c > text[n - 1]),
        "last element must be the unique minimum"
    );
    sais(text)
}

fn sais(s: &[u32]) -> Vec<u32> {
    let n = s.len();
    if n == 1 {
        return vec![0];
    }
    if n == 2 {
        return vec![1, 0];
    }

    // Type scan: S-type iff the suffix starting here is smaller than the next.
    let mut is_s = vec![false; n];
    is_s[n - 1] = true;
    for i in (0..n - 1).rev() {
        is_s[i] = s[i] < s[i + 1] || (s[i] == s[i + 1] && is_s[i + 1]);
    }
    let is_lms = |i: usize| i > 0 && is_s[i] && !is_s[i - 1];

    let alphabet = *s.iter().max().unwrap() as usize + 1;
    let mut sizes = vec![0u32; alphabet];
    for &c in s {
        sizes[c as usize] += 1;
    }

    let mut sa = vec![EMPTY; n];

    // First pass with LMS positions in text order: sorts the LMS substrings.
    let lms_text_order: Vec<u32> = (1..n).filter(|&i| is_lms(i)).map(|i| i as u32).collect();
    induce(s, &is_s, &sizes, &mut sa, &lms_text_order);

    // LMS positions now appear in sa in LMS-substring order.
    let lms_sorted: Vec<u32> = sa
        .iter()
        .copied()
        .filter(|&p| is_lms(p as usize))
        .collect();

    // Name LMS substrings. Adjacent LMS positions are at least 2 apart, so
    // half-position indexing stores names densely enough.
    let num_lms = lms_sorted.len();
    let mut names = vec![EMPTY; n / 2 + 1];
    let mut name_count = 0u32;
    let mut prev = usize::MAX;
    for &p in &lms_sorted {
        let p = p as usize;
        if prev != usize::MAX && !lms_substrings_equal(s, &is_s, prev, p) {
            name_count += 1;
        } else if prev == usize::MAX {
            name_count = 0;
        }
        names[p / 2] = name_count;
        prev = p;
    }
    let distinct = name_count as usize + 1;

    let lms_suffix_order: Vec<u32> = if distinct == num_lms {
        // All substrings distinct: substring order is already suffix order.
        lms_sorted
    } else {
        // Recurse on the reduced string of names, in text order. Its last
        // element is the sentinel's name 0, unique by sentinel uniqueness.
        let reduced: Vec<u32> = lms_text_order
            .iter()
            .map(|&p| names[p as usize / 2])
            .collect();
        let reduced_sa = sais(&reduced);
        reduced_sa
            .iter()
            .map(|&r| lms_text_order[r as usize])
            .collect()
    };

    induce(s, &is_s, &sizes, &mut sa, &lms_suffix_order);
    sa
}

/// One round of induced sorting: seed bucket tails with the given LMS order,
/// induce L-type suffixes left-to-right, then S-type right-to-left.
fn induce(s: &[u32], is_s: &[bool], sizes: &[u32], sa: &mut [u32], lms: &[u32]) {
    let n = s.len();
    sa.fill(EMPTY);

    let mut tails = bucket_tails(sizes);
    for &p in lms.iter().rev() {
        let c = s[p as usize] as usize;
        tails[c] -= 1;
        sa[tails[c] as usize] = p;
    }

    let mut heads = bucket_heads(sizes);
    for i in 0..n {
        let j = sa[i];
        if j != EMPTY && j > 0 {
            let q = (j - 1) as usize;
            if !is_s[q] {
                let c = s[q] as usize;
                sa[heads[c] as usize] = q as u32;
                heads[c] += 1;
            }
        }
    }

    let mut tails = bucket_tails(sizes);
    for i in (0..n).rev() {
        let j = sa[i];
        if j != EMPTY && j > 0 {
            let q = (j - 1) as usize;
            if is_s[q] {
                let c = s[q] as usize;
                tails[c] -= 1;
                sa[tails[c] as usize] = q as u32;
            }
        }
    }
}

fn bucket_heads(sizes: &[u32]) -> Vec<u32> {
    let mut heads = Vec::with_capacity(sizes.len());
    let mut sum = 0u32;
    for &sz in sizes {
        heads.push(sum);
        sum += sz;
    }
    heads
}

fn bucket_tails(sizes: &[u32]) -> Vec<u32> {
    let mut tails = Vec::with_capacity(sizes.len());
    let mut sum = 0u32;
    for &sz in sizes {
        sum += sz;
        tails.push(sum);
    }
    tails
}

/// Equality of the LMS substrings starting at `a` and `b` (each runs to the
/// next LMS position inclusive). Character equality over the closed interval
/// implies type equality, so characters suffice.
fn lms_substrings_equal(s: &[u32], is_s: &[bool], a: usize, b: usize) -> bool {
    let n = s.len();
    let is_lms = |i: usize| i > 0 && is_s[i] && !is_s[i - 1];
    // The sentinel substring (the final position) has no successor and is
    // unique by construction.
    if a == n - 1 || b == n - 1 {
        return a == b;
    }
    let mut d = 0;
    loop {
        if s[a + d] != s[b + d] {
            return false;
        }
        if d > 0 {
            let a_end = is_lms(a + d);
            let b_end = is_lms(b + d);
            if a_end || b_end {
                return a_end && b_end;
            }
        }
        d += 1;
        if a + d >= n || b + d >= n {
            return false;
        }
    }
}
