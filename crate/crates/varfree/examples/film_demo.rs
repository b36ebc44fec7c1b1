use varfree::jet::{parse, JetSpace, VarTable};
use varfree::solver::*;

fn main() {
    // straight cylinder, tilted start
    let t = std::time::Instant::now();
    let mesh = FilmMesh::disk(32, 32, Wall::cylinder(1.0), |t1, _| 0.3 * t1).unwrap();
    let relaxed = relax_film(&mesh, &FilmSettings::default()).unwrap();
    let (_, std) = relaxed.mesh.height_stats();
    let ortho = check_film_orthogonality(&relaxed.mesh).unwrap();
    println!(
        "cylinder 32x32: area={:.6} (pi={:.6}) std={:.3e} maxdev={:.4} meandev={:.4} iters={} conv={} {:?}",
        relaxed.area,
        std::f64::consts::PI,
        std,
        ortho.max_angle_deviation_deg,
        ortho.mean_angle_deviation_deg,
        relaxed.iterations,
        relaxed.converged,
        t.elapsed()
    );

    let t = std::time::Instant::now();
    let mesh = FilmMesh::disk(64, 64, Wall::cylinder(1.0), |t1, _| 0.3 * t1).unwrap();
    let relaxed = relax_film(&mesh, &FilmSettings { area_tol: 1e-12, ..Default::default() }).unwrap();
    let (_, std) = relaxed.mesh.height_stats();
    let ortho = check_film_orthogonality(&relaxed.mesh).unwrap();
    println!(
        "cylinder 64x64: area={:.6} std={:.3e} maxdev={:.4} meandev={:.4} iters={} conv={} {:?}",
        relaxed.area, std, ortho.max_angle_deviation_deg, ortho.mean_angle_deviation_deg,
        relaxed.iterations, relaxed.converged, t.elapsed()
    );

    // tilted pipe: axis direction (c, 0, 1), exact film = plane y = -c t1 + k
    let space = JetSpace::new(2, 1, 1);
    let phi = parse("(t1 - 0.2*y)^2 + t2^2 - 1", &space, &VarTable::ty(2)).unwrap();
    let wall = Wall::level_set(phi).unwrap();
    let t = std::time::Instant::now();
    let mesh = FilmMesh::disk(48, 48, wall, |_, _| 0.0).unwrap();
    let relaxed = relax_film(&mesh, &FilmSettings::default()).unwrap();
    let (mean, std) = relaxed.mesh.height_stats();
    let ortho = check_film_orthogonality(&relaxed.mesh).unwrap();
    println!(
        "tilted pipe 48x48: area={:.6} mean={:.4} std={:.4} maxdev={:.4} meandev={:.4} iters={} conv={} {:?}",
        relaxed.area, mean, std, ortho.max_angle_deviation_deg, ortho.mean_angle_deviation_deg,
        relaxed.iterations, relaxed.converged, t.elapsed()
    );
    // compare with the exact plane: heights should be ~ -0.2*t1 + const
    let mut max_plane_err: f64 = 0.0;
    for k in 0..relaxed.mesh.node_count() {
        let p = relaxed.mesh.position(k);
        max_plane_err = max_plane_err.max((p[2] - (mean - 0.2 * (p[0] - 0.0))).abs());
    }
    println!("tilted pipe plane error (vs y = mean - 0.2 t1): {max_plane_err:.4e}");

    // negative control: unconverged tilt has large deviation
    let mesh = FilmMesh::disk(16, 16, Wall::cylinder(1.0), |t1, _| 0.5 * t1).unwrap();
    let ortho = check_film_orthogonality(&mesh).unwrap();
    println!("unrelaxed tilt maxdev={:.2} deg", ortho.max_angle_deviation_deg);
}
