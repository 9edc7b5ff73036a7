import json

import numpy as np

import pdelearn.adjoint_solver
from pdelearn.cli import main
from pdelearn.dataset_io import (
    load_image,
    load_schedule,
    make_synthetic,
    save_image,
    save_schedule,
    synthetic_scenes,
    IdentityTask,
)
from pdelearn.fields import pad
from pdelearn.forward_solver import CoefficientSchedule
from pdelearn.invariants import INVARIANT_COUNT

from conftest import smooth_blob_array


def identity_manifest(tmp_path, count=2, size=10, dt=0.25):
    sources = synthetic_scenes(count, size, size, seed=5)
    return make_synthetic(IdentityTask(), sources, tmp_path / "data", dt=dt)


def write_image(tmp_path, name, arr):
    path = tmp_path / name
    save_image(pad(arr, 2), path)
    return path


class TestTrainCommand:
    def test_identity_task_converges_immediately(self, tmp_path, capsys):
        manifest = identity_manifest(tmp_path)
        out = tmp_path / "sched.json"
        log = tmp_path / "train.log"
        code = main([
            "train", "--manifest", str(manifest), "--out", str(out),
            "--log", str(log), "--threads", "1",
        ])
        assert code == 0
        sched = load_schedule(out)
        assert np.all(sched.a == 0.0)
        text = log.read_text()
        assert "iter=   0" in text and "J=0.0000000000e+00" in text
        assert "termination:" in text

    def test_missing_manifest_exits_3_and_names_path(self, tmp_path, capsys):
        code = main([
            "train", "--manifest", str(tmp_path / "absent.json"),
            "--out", str(tmp_path / "s.json"),
        ])
        assert code == 3
        assert "absent.json" in capsys.readouterr().err

    def test_deterministic_schedule_bytes(self, tmp_path):
        manifest = identity_manifest(tmp_path)
        out1 = tmp_path / "s1.json"
        out2 = tmp_path / "s2.json"
        assert main(["train", "--manifest", str(manifest), "--out", str(out1)]) == 0
        assert main(["train", "--manifest", str(manifest), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_dt_defaults_to_manifest_value(self, tmp_path):
        manifest = identity_manifest(tmp_path, dt=0.25)
        out = tmp_path / "s.json"
        assert main(["train", "--manifest", str(manifest), "--out", str(out)]) == 0
        assert load_schedule(out).steps == 4
        assert main([
            "train", "--manifest", str(manifest), "--out", str(out),
            "--dt", "0.5",
        ]) == 0
        assert load_schedule(out).steps == 2


class TestApplyCommand:
    def test_zero_schedule_round_trips_the_image(self, tmp_path):
        img = write_image(tmp_path, "in.png", smooth_blob_array(10, 10, seed=1))
        sched_path = tmp_path / "zero.json"
        save_schedule(CoefficientSchedule.zeros(0.25), sched_path)
        out = tmp_path / "out.png"
        code = main([
            "apply", "--coeffs", str(sched_path),
            "--input", str(img), "--output", str(out),
        ])
        assert code == 0
        assert out.read_bytes()[-100:] == img.read_bytes()[-100:]
        assert np.array_equal(load_image(out).interior, load_image(img).interior)

    def test_constant_source_saturates(self, tmp_path):
        img = write_image(tmp_path, "in.png", smooth_blob_array(8, 8, seed=2))
        a = np.zeros((4, INVARIANT_COUNT))
        a[:, 0] = 1.0
        sched_path = tmp_path / "one.json"
        save_schedule(CoefficientSchedule(0.25, a, np.zeros_like(a)), sched_path)
        out = tmp_path / "out.png"
        assert main([
            "apply", "--coeffs", str(sched_path),
            "--input", str(img), "--output", str(out),
        ]) == 0
        assert np.all(load_image(out).interior == 1.0)

    def test_trajectory_dump(self, tmp_path):
        img = write_image(tmp_path, "in.png", smooth_blob_array(8, 8, seed=3))
        sched_path = tmp_path / "zero.json"
        save_schedule(CoefficientSchedule.zeros(0.25), sched_path)
        dump = tmp_path / "steps"
        assert main([
            "apply", "--coeffs", str(sched_path), "--input", str(img),
            "--output", str(tmp_path / "out.png"),
            "--dump-trajectory", str(dump),
        ]) == 0
        files = sorted(p.name for p in dump.iterdir())
        assert files == [f"state_{i:03d}.png" for i in range(5)]

    def test_blow_up_exits_2_naming_the_step(self, tmp_path, capsys):
        img = write_image(tmp_path, "in.png", smooth_blob_array(8, 8, seed=4))
        a = np.zeros((4, INVARIANT_COUNT))
        a[:, 0] = 100.0
        sched_path = tmp_path / "explode.json"
        save_schedule(CoefficientSchedule(0.25, a, np.zeros_like(a)), sched_path)
        code = main([
            "apply", "--coeffs", str(sched_path),
            "--input", str(img), "--output", str(tmp_path / "out.png"),
        ])
        assert code == 2
        assert "time index" in capsys.readouterr().err


class TestEvalCommand:
    def test_psnr_of_identical_images_is_capped(self, tmp_path, capsys):
        img = write_image(tmp_path, "a.png", smooth_blob_array(8, 8, seed=5))
        assert main(["eval", "--pred", str(img), "--truth", str(img)]) == 0
        assert capsys.readouterr().out.strip() == "psnr 99.0000"

    def test_psnr_of_offset_images(self, tmp_path, capsys):
        base = np.full((8, 8), 0.25)
        a = write_image(tmp_path, "a.png", base)
        b = write_image(tmp_path, "b.png", base + 0.1)
        assert main(["eval", "--pred", str(b), "--truth", str(a)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("psnr 20.")

    def test_f_measure_output(self, tmp_path, capsys):
        truth = np.zeros((8, 8))
        truth[:, :4] = 1.0
        pred = np.zeros((8, 8))
        pred[:, :2] = 1.0
        a = write_image(tmp_path, "t.png", truth)
        b = write_image(tmp_path, "p.png", pred)
        assert main([
            "eval", "--pred", str(b), "--truth", str(a), "--metric", "f",
        ]) == 0
        assert capsys.readouterr().out.strip() == "f_measure 0.6000"

    def test_grid_mismatch_is_usage_error(self, tmp_path, capsys):
        a = write_image(tmp_path, "a.png", np.zeros((8, 8)))
        b = write_image(tmp_path, "b.png", np.zeros((9, 9)))
        assert main(["eval", "--pred", str(a), "--truth", str(b)]) == 1


class TestGradcheckCommand:
    def test_passes_on_smooth_instance(self, tmp_path, capsys):
        sources = synthetic_scenes(2, 12, 12, seed=6)
        manifest = make_synthetic(IdentityTask(), sources, tmp_path / "d", dt=0.1)
        code = main([
            "gradcheck", "--manifest", str(manifest), "--dt", "0.1",
            "--entries", "30", "--seed", "1", "--threads", "1",
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert "worst_relative_error" in out and "PASS" in out

    def test_corrupted_sigma_family_fails_loudly(self, tmp_path, capsys, monkeypatch):
        sources = synthetic_scenes(2, 12, 12, seed=6)
        manifest = make_synthetic(IdentityTask(), sources, tmp_path / "d", dt=0.1)
        true_sigma = pdelearn.adjoint_solver.sigma_fields

        def corrupted(state, a, b):
            fam = true_sigma(state, a, b)
            fam.C = {pq: -field for pq, field in fam.C.items()}
            return fam

        monkeypatch.setattr(pdelearn.adjoint_solver, "sigma_fields", corrupted)
        code = main([
            "gradcheck", "--manifest", str(manifest), "--dt", "0.1",
            "--entries", "30", "--seed", "1", "--threads", "1",
        ])
        assert code == 2
        assert "FAIL" in capsys.readouterr().err


class TestSynthCommand:
    def test_generate_blur_task(self, tmp_path, capsys):
        out_dir = tmp_path / "task"
        code = main([
            "synth", "--task", "blur", "--generate", "3", "--size", "16",
            "--out", str(out_dir), "--seed", "2",
        ])
        assert code == 0
        manifest_path = capsys.readouterr().out.strip()
        doc = json.loads((out_dir / "manifest.json").read_text())
        assert len(doc["pairs"]) == 3
        assert manifest_path.endswith("manifest.json")

    def test_requires_sources_or_generate(self, tmp_path, capsys):
        assert main(["synth", "--task", "blur", "--out", str(tmp_path)]) == 1

    def test_byte_identical_reruns(self, tmp_path):
        for d in ("one", "two"):
            main([
                "synth", "--task", "noise", "--generate", "2", "--size", "12",
                "--out", str(tmp_path / d), "--seed", "3",
            ])
        for name in ("noise_000_input.png", "noise_000_target.png", "manifest.json"):
            assert (tmp_path / "one" / name).read_bytes() == (
                tmp_path / "two" / name
            ).read_bytes()

    def test_sources_from_files(self, tmp_path, capsys):
        img_paths = []
        for k in range(2):
            p = write_image(tmp_path, f"src{k}.png", smooth_blob_array(12, 12, seed=k))
            img_paths.append(str(p))
        out_dir = tmp_path / "task"
        assert main([
            "synth", "--task", "identity", "--out", str(out_dir),
            "--sources", *img_paths,
        ]) == 0
        doc = json.loads((out_dir / "manifest.json").read_text())
        assert len(doc["pairs"]) == 2
        first = load_image(out_dir / doc["pairs"][0]["input"])
        assert np.array_equal(first.interior, load_image(img_paths[0]).interior)


class TestInvariantsCommand:
    def test_dumps_all_maps(self, tmp_path):
        img = write_image(tmp_path, "in.png", smooth_blob_array(12, 12, seed=7))
        out_dir = tmp_path / "maps"
        assert main(["invariants", "--input", str(img), "--out", str(out_dir)]) == 0
        files = sorted(p.name for p in out_dir.iterdir())
        assert files == [f"inv_{j:02d}.png" for j in range(INVARIANT_COUNT)]
        # inv_0 is constant, rendered mid-gray.
        inv0 = load_image(out_dir / "inv_00.png")
        assert np.all(inv0.interior == 128 / 255)

    def test_single_map(self, tmp_path):
        img = write_image(tmp_path, "in.png", smooth_blob_array(12, 12, seed=8))
        out_dir = tmp_path / "one"
        assert main([
            "invariants", "--input", str(img), "--out", str(out_dir),
            "--which", "7",
        ]) == 0
        assert [p.name for p in out_dir.iterdir()] == ["inv_07.png"]

    def test_bad_index_is_usage_error(self, tmp_path):
        img = write_image(tmp_path, "in.png", smooth_blob_array(12, 12, seed=9))
        assert main([
            "invariants", "--input", str(img), "--out", str(tmp_path / "x"),
            "--which", "17",
        ]) == 1


class TestUsage:
    def test_unknown_flag_exits_1(self, capsys):
        assert main(["train", "--nonsense"]) == 1

    def test_unknown_command_exits_1(self, capsys):
        assert main(["frobnicate"]) == 1


class TestEndToEnd:
    def test_diffusion_manifest_schedule_reapplies(self, tmp_path, capsys):
        from pdelearn.dataset_io import DiffuseTask, diffuse

        scenes = synthetic_scenes(4, 32, 32, seed=55)
        mpath = make_synthetic(DiffuseTask(0.5, 1.0, 0.02), scenes[:3],
                               tmp_path / "task", dt=0.02)
        sched_path = tmp_path / "sched.json"
        assert main([
            "train", "--manifest", str(mpath), "--out", str(sched_path),
            "--lambda", "1e-6", "--mu", "1e-6",
        ]) == 0
        held = tmp_path / "held.png"
        save_image(pad(scenes[3], 2), held)
        out = tmp_path / "out.png"
        assert main([
            "apply", "--coeffs", str(sched_path),
            "--input", str(held), "--output", str(out),
        ]) == 0
        want = diffuse(load_image(held).interior, 0.5, 1.0, 0.02)
        got = load_image(out).interior
        rms = float(np.sqrt(np.mean((got - want) ** 2)))
        # The float-space dynamics land near 1e-4 RMS (the AC-3 level); the
        # 8-bit files on both ends add a quantization floor of ~1.1e-3.
        assert rms <= 2.5e-3, rms

        # The schedule is size-independent: the same file applies to an
        # image larger than anything in the training manifest.
        big = tmp_path / "big.png"
        save_image(pad(synthetic_scenes(1, 48, 48, seed=77)[0], 2), big)
        big_out = tmp_path / "big_out.png"
        assert main([
            "apply", "--coeffs", str(sched_path),
            "--input", str(big), "--output", str(big_out),
        ]) == 0
        want_big = diffuse(load_image(big).interior, 0.5, 1.0, 0.02)
        got_big = load_image(big_out).interior
        assert float(np.sqrt(np.mean((got_big - want_big) ** 2))) <= 2.5e-3

    def test_blur_manifest_meets_psnr_bar_via_eval(self, tmp_path, capsys):
        from pdelearn.dataset_io import BlurTask, gaussian_blur

        scenes = synthetic_scenes(4, 48, 48, seed=66)
        mpath = make_synthetic(BlurTask(1.0), scenes[:3], tmp_path / "task",
                               dt=0.02)
        sched_path = tmp_path / "sched.json"
        assert main([
            "train", "--manifest", str(mpath), "--out", str(sched_path),
            "--lambda", "1e-6", "--mu", "1e-6",
        ]) == 0
        held = tmp_path / "held.png"
        truth = tmp_path / "truth.png"
        save_image(pad(scenes[3], 2), held)
        save_image(pad(gaussian_blur(scenes[3], 1.0), 2), truth)
        out = tmp_path / "out.png"
        assert main([
            "apply", "--coeffs", str(sched_path),
            "--input", str(held), "--output", str(out),
        ]) == 0
        capsys.readouterr()
        assert main(["eval", "--pred", str(out), "--truth", str(truth)]) == 0
        reported = float(capsys.readouterr().out.split()[-1])
        assert reported >= 35.0, reported
