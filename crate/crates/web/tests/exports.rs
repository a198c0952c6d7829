use syncma_web::{landscape_grid, median_curves, trajectory_path, FRAME_LEN};

#[test]
fn landscape_is_zero_at_the_origin() {
    let grid = landscape_grid("rastrigin", -2.0, 2.0, 5).unwrap();
    assert_eq!(grid.len(), 25);
    assert_eq!(grid[12], 0.0);
    assert!(grid.iter().all(|&v| v >= 0.0));
    assert!(landscape_grid("nope", -1.0, 1.0, 4).is_err());
    assert!(landscape_grid("sphere", 1.0, -1.0, 4).is_err());
}

#[test]
fn trajectories_have_one_frame_per_generation() {
    for optimizer in ["syncma", "cmaes"] {
        let path = trajectory_path("sphere", optimizer, 2.0, 0.5, [2.0, -1.5], 40, 3).unwrap();
        assert_eq!(path.len(), 41 * FRAME_LEN);
        let first = &path[..FRAME_LEN];
        assert_eq!((first[0], first[1]), (2.0, -1.5));
        assert!(first[5].is_infinite());
        for f in path.chunks(FRAME_LEN).skip(1) {
            assert!(f[2] > 0.0 && f[4] > 0.0 && f[2] * f[4] > f[3] * f[3]);
        }
        let last = &path[path.len() - FRAME_LEN..];
        assert!(last[5] < 6.25, "{optimizer}: {}", last[5]);
        assert_eq!(
            path,
            trajectory_path("sphere", optimizer, 2.0, 0.5, [2.0, -1.5], 40, 3).unwrap()
        );
    }
    assert!(trajectory_path("sphere", "bfgs", 2.0, 0.5, [0.0, 0.0], 3, 0).is_err());
}

#[test]
fn curves_share_one_grid() {
    let out = median_curves("ackley", 4, 160, 3, 1, &[1.0, 4.0]).unwrap();
    let generations = 160 / 8;
    assert_eq!(out.len(), 4 * generations);
    assert_eq!(out[0], 8.0);
    assert_eq!(out[generations - 1], 160.0);
    for block in out.chunks(generations).skip(1) {
        assert!(block.windows(2).all(|w| w[1] <= w[0]));
    }
    assert!(median_curves("sphere", 64, 1000, 2, 0, &[2.0]).is_err());
}
