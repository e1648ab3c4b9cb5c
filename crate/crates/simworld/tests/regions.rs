use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skyweave_simworld::{discretize, Point, Polygon, Rect};

/// Winding number of `poly` around `p`; non-zero means inside.
fn winding(poly: &[Point], p: Point) -> i32 {
    let mut w = 0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && cross > 0.0 {
                w += 1;
            }
        } else if b.y <= p.y && cross < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Star-shaped, hence simple, polygon around `c`.
fn star(rng: &mut ChaCha8Rng, c: Point) -> Vec<Point> {
    let n = rng.random_range(3..12);
    let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    angles
        .into_iter()
        .map(|a| {
            let r = rng.random_range(5.0..45.0);
            Point::new(c.x + r * a.cos(), c.y + r * a.sin())
        })
        .collect()
}

#[test]
fn cell_membership_matches_winding_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let bounds = Rect { min: Point::new(0.0, 0.0), max: Point::new(100.0, 80.0) };
    let mut members = 0;
    for k in 0..100 {
        let c = Point::new(rng.random_range(10.0..90.0), rng.random_range(10.0..70.0));
        let poly = star(&mut rng, c);
        let angle = if k % 2 == 0 { 0.0 } else { rng.random_range(-30.0..30.0) };
        let d = discretize(bounds, 7.0, angle, &[("R".into(), Polygon(poly.clone()))], 0).unwrap();
        let region = d.grid.region("R").unwrap();
        for i in 0..d.grid.num_cells() {
            let inside = winding(&poly, d.coords[i as usize]) != 0;
            assert_eq!(region.contains(&i), inside, "polygon {k}, cell {i}");
            members += inside as usize;
        }
    }
    assert!(members > 100);
}
