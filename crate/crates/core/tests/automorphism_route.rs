use bts_core::transform::{automorphism_index, decompose_permutation, is_permutation, GridMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[test]
fn thousand_rotations_on_flagship_grid() {
    let n = 1 << 17;
    let map = GridMap::new(64, 32, 64).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let r = rng.gen_range(0..n / 2);
        let route = decompose_permutation(r, &map);
        assert!(is_permutation(&route.vertical_transfers()), "r = {r}");
        assert!(is_permutation(&route.horizontal_transfers()), "r = {r}");
        let mut hit = vec![false; map.n_pe()];
        for pe in 0..map.n_pe() {
            let dst = route.destination_pes(pe);
            assert_eq!(dst.len(), 1, "r = {r}, pe = {pe}");
            assert!(!hit[dst[0]]);
            hit[dst[0]] = true;
        }
        for i in (0..n).step_by(7) {
            assert_eq!(route.route(i).0, automorphism_index(i, r, n), "r = {r}, i = {i}");
        }
    }
}

#[test]
fn identity_rotation() {
    let map = GridMap::new(8, 4, 16).unwrap();
    let route = decompose_permutation(0, &map);
    assert!(route.is_identity());
}
