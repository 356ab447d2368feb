//! Segment-level self-intersection test for the offset boundary of the
//! meridian strip, with uniform spatial hashing to keep the pair scan
//! near-linear. The result is independent of the bucket traversal order.

use crate::par;

pub type Point = (f64, f64);

#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    /// Polyline id and index within it, used to skip adjacent pairs.
    pub chain: usize,
    pub index: usize,
}

fn orient(p: Point, q: Point, r: Point) -> f64 {
    (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
}

fn on_segment(p: Point, q: Point, r: Point) -> bool {
    r.0 >= p.0.min(q.0) - 1e-14
        && r.0 <= p.0.max(q.0) + 1e-14
        && r.1 >= p.1.min(q.1) - 1e-14
        && r.1 <= p.1.max(q.1) + 1e-14
}

/// Proper or touching intersection of two closed segments.
pub fn segments_intersect(s: &Segment, t: &Segment) -> Option<Point> {
    let (p1, p2, p3, p4) = (s.a, s.b, t.a, t.b);
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        let t_num = d1;
        let denom = d1 - d2;
        let t_par = t_num / denom;
        return Some((
            p1.0 + t_par * (p2.0 - p1.0),
            p1.1 + t_par * (p2.1 - p1.1),
        ));
    }
    if d1 == 0.0 && on_segment(p3, p4, p1) {
        return Some(p1);
    }
    if d2 == 0.0 && on_segment(p3, p4, p2) {
        return Some(p2);
    }
    if d3 == 0.0 && on_segment(p1, p2, p3) {
        return Some(p3);
    }
    if d4 == 0.0 && on_segment(p1, p2, p4) {
        return Some(p4);
    }
    None
}

fn adjacent(s: &Segment, t: &Segment) -> bool {
    s.chain == t.chain && s.index.abs_diff(t.index) <= 1
}

/// Find any non-adjacent crossing among the segments, bucketing by a
/// uniform grid sized to the median segment length.
pub fn find_crossing(segments: &[Segment]) -> Option<(Point, usize, usize)> {
    if segments.len() < 2 {
        return None;
    }
    let mut lens: Vec<f64> = segments
        .iter()
        .map(|s| ((s.b.0 - s.a.0).powi(2) + (s.b.1 - s.a.1).powi(2)).sqrt())
        .collect();
    lens.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cell = (lens[lens.len() / 2] * 2.0).max(1e-12);

    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    for s in segments {
        min_x = min_x.min(s.a.0.min(s.b.0));
        min_y = min_y.min(s.a.1.min(s.b.1));
    }
    let key = |x: f64, y: f64| {
        (
            ((x - min_x) / cell).floor() as i64,
            ((y - min_y) / cell).floor() as i64,
        )
    };
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (i, s) in segments.iter().enumerate() {
        let (x0, y0) = key(s.a.0.min(s.b.0), s.a.1.min(s.b.1));
        let (x1, y1) = key(s.a.0.max(s.b.0), s.a.1.max(s.b.1));
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                buckets.entry((gx, gy)).or_default().push(i);
            }
        }
    }
    // Deterministic candidate ordering regardless of map iteration.
    let mut bucket_lists: Vec<&Vec<usize>> = buckets.values().collect();
    bucket_lists.sort_by_key(|v| (v.len(), v.first().copied()));
    let hits: Vec<Option<(Point, usize, usize)>> = par::map_collect(&bucket_lists, |list| {
        for (pos, &i) in list.iter().enumerate() {
            for &j in &list[pos + 1..] {
                let (s, t) = (&segments[i], &segments[j]);
                if adjacent(s, t) {
                    continue;
                }
                if let Some(p) = segments_intersect(s, t) {
                    return Some((p, i.min(j), i.max(j)));
                }
            }
        }
        None
    });
    // Pick the smallest witness for determinism across thread counts.
    hits.into_iter()
        .flatten()
        .min_by(|a, b| (a.1, a.2).cmp(&(b.1, b.2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: Point, b: Point, chain: usize, index: usize) -> Segment {
        Segment { a, b, chain, index }
    }

    #[test]
    fn crossing_and_non_crossing() {
        let x = seg((0.0, 0.0), (1.0, 1.0), 0, 0);
        let y = seg((0.0, 1.0), (1.0, 0.0), 1, 0);
        let p = segments_intersect(&x, &y).unwrap();
        assert!((p.0 - 0.5).abs() < 1e-12 && (p.1 - 0.5).abs() < 1e-12);
        let z = seg((2.0, 2.0), (3.0, 2.0), 1, 1);
        assert!(segments_intersect(&x, &z).is_none());
    }

    #[test]
    fn hashing_agrees_with_all_pairs() {
        // A spiral-ish polyline with a deliberate crossing.
        let mut pts: Vec<Point> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.07;
                ((1.0 + 0.1 * t) * t.cos(), (1.0 + 0.1 * t) * t.sin())
            })
            .collect();
        pts.push((pts[0].0 + 0.01, pts[0].1 + 0.01)); // close up: forces a cross
        let segs: Vec<Segment> = pts
            .windows(2)
            .enumerate()
            .map(|(i, w)| seg(w[0], w[1], 0, i))
            .collect();
        let fast = find_crossing(&segs);
        // Brute force oracle.
        let mut brute = None;
        'outer: for i in 0..segs.len() {
            for j in i + 1..segs.len() {
                if adjacent(&segs[i], &segs[j]) {
                    continue;
                }
                if let Some(p) = segments_intersect(&segs[i], &segs[j]) {
                    brute = Some((p, i, j));
                    break 'outer;
                }
            }
        }
        assert_eq!(fast.is_some(), brute.is_some());
    }
}
