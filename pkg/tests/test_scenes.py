"""Bundled scenes: structure, visibility character, preset plumbing."""

import subprocess
import sys

import numpy as np
import pytest

from plarray import (
    compute_image_sources,
    make_ura,
    partition_subarrays,
    scenes,
    subarray_visibility,
    visibility_mask,
)


class TestPresets:
    def test_height_lists(self):
        assert scenes.UE_HEIGHTS["M1"] == 1.546
        assert scenes.UE_HEIGHTS["M4"] == 1.478
        assert scenes.UE_HEIGHTS["L3"] == 1.162
        assert len(scenes.UE_HEIGHTS_MEDIUM) == len(scenes.UE_HEIGHTS_LARGE) == 5

    def test_position_defaults_per_family(self):
        x, y, z = scenes.ue_position("M2")
        assert (x, y) == scenes.DEFAULT_UE_XY["medium_like"] and z == 0.895
        x, y, z = scenes.ue_position("L2")
        assert (x, y) == scenes.DEFAULT_UE_XY["large_like"] and z == 1.317

    def test_explicit_xy_override(self):
        assert scenes.ue_position("M1", xy=(1.0, -0.5)) == (1.0, -0.5, 1.546)

    def test_unknown_scene_rejected(self):
        with pytest.raises(KeyError):
            scenes.scene_path("tiny_like")


class TestMediumScene:
    def test_partial_whiteboard_visibility(self):
        env = scenes.medium_like()
        ue = scenes.ue_position("M1")
        # measurement-area sized aperture: 2.39 m x 1.51 m at half-wavelength
        arr = make_ura(70, 111, 6.95e9, origin=(0.0, 0.0, 1.5))
        sources = compute_image_sources(env, ue, 1)
        mask = visibility_mask(env, ue, arr.element_positions, sources)
        assert mask["LOS"].all()
        frac_wb = mask["whiteboard"].mean()
        assert 0.05 < frac_wb < 0.95  # distinct partial region
        frac_win = mask["window"].mean()
        assert 0.2 < frac_win <= 1.0

    def test_whiteboard_region_is_upper_band(self):
        env = scenes.medium_like()
        ue = scenes.ue_position("M1")
        arr = make_ura(40, 40, 6.95e9, origin=(0.0, 0.0, 1.5))
        sources = [
            s for s in compute_image_sources(env, ue, 1) if s.component_id == "whiteboard"
        ]
        mask = visibility_mask(env, ue, arr.element_positions, sources)["whiteboard"]
        grid = mask.reshape(40, 40)
        by_row = grid.mean(axis=1)
        # rows index bottom-to-top; visibility should grow with height
        assert by_row[-5:].mean() > by_row[:5].mean()


class TestLargeScene:
    def test_right_wall_invisible_in_lower_corner(self):
        env = scenes.large_like()
        ue = scenes.ue_position("L1")
        # 88 x 32 aperture at 6 GHz, mounted like the corridor setup
        arr = make_ura(32, 88, 6e9, origin=(0.0, 0.0, 1.5))
        sources = compute_image_sources(env, ue, 1)
        mask = visibility_mask(env, ue, arr.element_positions, sources)
        assert mask["LOS"].all()
        rw = mask["right_wall"].reshape(32, 88)
        assert 0.1 < rw.mean() < 0.95
        # invisibility concentrates toward the bottom rows (raised wall edge)
        assert rw[:8].mean() < rw[-8:].mean()
        subs = partition_subarrays(arr, 8)
        grid = subarray_visibility(mask["right_wall"], arr, subs)
        assert 0 < grid.sum() < grid.size

    def test_left_wall_reaches_array(self):
        env = scenes.large_like()
        ue = scenes.ue_position("L1")
        arr = make_ura(16, 44, 6e9, origin=(0.0, 0.0, 1.5))
        sources = compute_image_sources(env, ue, 1)
        mask = visibility_mask(env, ue, arr.element_positions, sources)
        assert mask["left_wall"].mean() > 0.5


class TestLargeSceneEndToEnd:
    def test_right_wall_map_tracks_geometric_visibility(self):
        from plarray import (
            Gates,
            associate_subarray,
            estimate_subarrays,
            mismatch_score,
            predict,
            synthesize,
            visibility_and_amplitude_maps,
        )

        env = scenes.large_like()
        ue = scenes.ue_position("L1")
        f_c = 6.0e9
        arr = make_ura(16, 24, f_c, origin=(0.0, 0.0, 1.5))
        band = 500e6
        freqs = np.linspace(f_c - band / 2, f_c + band / 2, 48)
        tensor, _, mask = synthesize(
            env, ue, arr, freqs, max_order=1, noise_var=1e-10, seed=3
        )
        subs = partition_subarrays(arr, 4)
        results = estimate_subarrays(tensor.H, arr, subs, freqs)
        sources = compute_image_sources(env, ue, 1)
        gates = Gates(2.0 / band, np.radians(5), np.radians(5))
        assocs = [
            associate_subarray(
                r, predict(env, ue, subs[r.subarray_index], sources, arr), gates
            )
            for r in results
        ]
        maps = visibility_and_amplitude_maps(results, assocs, arr, subs)
        vis = subarray_visibility(mask["right_wall"], arr, subs)
        assert 0 < vis.sum() < vis.size  # genuinely partial
        assert mismatch_score(vis, maps["right_wall"]) <= 0.15
        # direct path present everywhere
        assert not np.isnan(maps["LOS"]).any()


class TestKernelOverride:
    def test_env_var_forces_numpy_backend(self):
        code = "import plarray; print(plarray.KERNEL_BACKEND)"
        out = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True,
            text=True,
            env={"PATH": "/usr/bin:/bin", "PLARRAY_KERNELS": "numpy"},
        )
        assert out.stdout.strip() == "numpy"

    def test_env_var_rejects_unknown(self):
        code = "import plarray"
        out = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True,
            text=True,
            env={"PATH": "/usr/bin:/bin", "PLARRAY_KERNELS": "fortran"},
        )
        assert out.returncode != 0
