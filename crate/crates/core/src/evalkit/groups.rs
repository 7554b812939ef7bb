use crate::error::{invalid, Result};

pub const NUM_DENSITY_GROUPS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityGroup {
    /// 1-based, sparsest first.
    pub group: usize,
    /// Indices into the input slice.
    pub members: Vec<usize>,
}

/// Splits scenes into count quintiles. Scenes are ordered by `(count, id)`;
/// when the total is not a multiple of five the first groups take one extra.
/// Fewer than five scenes give one group per scene.
pub fn density_groups(scenes: &[(&str, usize)]) -> Result<Vec<DensityGroup>> {
    let n = scenes.len();
    if n == 0 {
        return Err(invalid!("density grouping needs at least one scene"));
    }
    let k = n.min(NUM_DENSITY_GROUPS);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scenes[a].1.cmp(&scenes[b].1).then_with(|| scenes[a].0.cmp(scenes[b].0)));
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    Ok((0..k)
        .map(|g| {
            let len = base + usize::from(g < extra);
            let members = order[start..start + len].to_vec();
            start += len;
            DensityGroup { group: g + 1, members }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(counts: &[usize]) -> Vec<(String, usize)> {
        counts.iter().enumerate().map(|(i, &c)| (format!("s{i:03}"), c)).collect()
    }

    fn group_counts(scenes: &[(String, usize)]) -> Vec<Vec<usize>> {
        let refs: Vec<(&str, usize)> = scenes.iter().map(|(s, c)| (s.as_str(), *c)).collect();
        density_groups(&refs)
            .unwrap()
            .into_iter()
            .map(|g| g.members.iter().map(|&i| refs[i].1).collect())
            .collect()
    }

    #[test]
    fn exact_quintiles() {
        let g = group_counts(&named(&(1..=10).collect::<Vec<_>>()));
        assert_eq!(g.iter().map(Vec::len).collect::<Vec<_>>(), vec![2; 5]);
        assert_eq!(g[0], vec![1, 2]);
    }

    #[test]
    fn remainder_goes_first() {
        let g = group_counts(&named(&(1..=11).collect::<Vec<_>>()));
        assert_eq!(g.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 2, 2, 2, 2]);
        let g = group_counts(&named(&(1..=14).collect::<Vec<_>>()));
        assert_eq!(g.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 3, 3, 3, 2]);
    }

    #[test]
    fn small_sets_get_one_group_per_scene() {
        assert!(density_groups(&[]).is_err());
        assert_eq!(group_counts(&named(&[5, 2])), vec![vec![2], vec![5]]);
    }
}
