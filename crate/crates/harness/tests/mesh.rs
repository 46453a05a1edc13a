use ghrelax_harness::mesh::{mesh_geodesic_metric, sample_vertices, MeshError, MeshGraph, SampleMode};

/// Unit-square strip of `k` squares: bottom vertex `i` is `(i, 0)`, top is `(i, 1)`.
fn strip(k: usize) -> MeshGraph {
    let mut vertices = Vec::new();
    for i in 0..=k {
        vertices.push([i as f64, 0.0, 0.0]);
        vertices.push([i as f64, 1.0, 0.0]);
    }
    let mut faces = Vec::new();
    for i in 0..k {
        let (b0, t0, b1, t1) = (2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3);
        faces.push([b0, b1, t0]);
        faces.push([b1, t1, t0]);
    }
    MeshGraph::new(vertices, faces).unwrap()
}

fn off_text(mesh: &MeshGraph) -> String {
    let mut s = format!("OFF\n# a strip\n{} {} 0\n", mesh.vertex_count(), mesh.faces().len());
    for v in mesh.vertices() {
        s.push_str(&format!("{} {} {}\n", v[0], v[1], v[2]));
    }
    for f in mesh.faces() {
        s.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    s
}

#[test]
fn geodesics_follow_the_shortest_chain() {
    let mesh = strip(4);
    let d = mesh.geodesics_from(0).unwrap();
    // along the bottom edge
    assert_eq!(d[8], 4.0);
    // bottom-left to top-right: up once, then along the top
    assert_eq!(d[9], 5.0);
    assert!(mesh.edge_lengths().all(|(_, _, l)| l > 0.0));
}

#[test]
fn sampled_metric_is_a_metric() {
    let mesh = strip(5);
    let all: Vec<usize> = (0..mesh.vertex_count()).collect();
    let space = mesh_geodesic_metric(&mesh, &all).unwrap();
    assert_eq!(space.len(), 12);
    assert!(ghrelax::FiniteMetricSpace::validate(&space.to_rows(), 1e-12).is_ok());
    let one = mesh_geodesic_metric(&mesh, &[3]).unwrap();
    assert_eq!(one.to_rows(), vec![vec![0.0]]);
}

#[test]
fn sampling_modes() {
    let mesh = strip(6);
    let nv = mesh.vertex_count();
    let mut all = sample_vertices(&mesh, nv, SampleMode::Random, 1).unwrap();
    all.sort();
    assert_eq!(all, (0..nv).collect::<Vec<_>>());
    let a = sample_vertices(&mesh, 5, SampleMode::Random, 9).unwrap();
    assert_eq!(a, sample_vertices(&mesh, 5, SampleMode::Random, 9).unwrap());
    assert!(matches!(sample_vertices(&mesh, nv + 1, SampleMode::Random, 0), Err(MeshError::TooMany { .. })));

    // the second farthest-point sample is the farthest vertex from the first,
    // and on a strip the two sit at opposite ends
    for seed in 0..5 {
        let pick = sample_vertices(&mesh, 2, SampleMode::FarthestPoint, seed).unwrap();
        let from_first = mesh.geodesics_from(pick[0]).unwrap();
        assert_eq!(from_first[pick[1]], from_first.iter().copied().fold(0.0, f64::max));
        let xs: Vec<f64> = pick.iter().map(|&v| mesh.vertices()[v][0]).collect();
        assert_eq!(xs[0].min(xs[1]), 0.0);
        assert_eq!(xs[0].max(xs[1]), 6.0);
    }
}

#[test]
fn off_round_trip_and_errors() {
    let mesh = strip(3);
    let parsed = MeshGraph::parse_off(&off_text(&mesh)).unwrap();
    assert_eq!(parsed.vertex_count(), mesh.vertex_count());
    assert_eq!(parsed.faces(), mesh.faces());

    let quad = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
    assert_eq!(MeshGraph::parse_off(quad).unwrap().faces().len(), 2);
    assert!(matches!(MeshGraph::parse_off("PLY\n"), Err(MeshError::Parse { .. })));
    assert!(matches!(MeshGraph::parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"), Err(MeshError::BadIndex { .. })));
    assert!(matches!(MeshGraph::parse_off("OFF\n3 1 0\n0 0 0\n0 0 0\n0 1 0\n3 0 1 2\n"), Err(MeshError::DegenerateEdge(0, 1))));

    let two = "OFF\n6 2 0\n0 0 0\n1 0 0\n0 1 0\n5 0 0\n6 0 0\n5 1 0\n3 0 1 2\n3 3 4 5\n";
    let m = MeshGraph::parse_off(two).unwrap();
    assert!(matches!(mesh_geodesic_metric(&m, &[0, 4]), Err(MeshError::DisconnectedMesh(0, 4))));
}
