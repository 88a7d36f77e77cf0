#!/usr/bin/env python

import math
import unittest

import numpy as np
from scipy import ndimage

from common import random_dataset
from vision_state_fusion.augment import (AugmentConfig, augment_dataset,
                                         augment_pipeline, hflip, pitch_warp)
from vision_state_fusion.augment.photometric import (add_noise,
                                                     apply_exposure,
                                                     apply_gamma, apply_range,
                                                     blur, vignette)
from vision_state_fusion.errors import SchemaMismatchError
from vision_state_fusion.poses import (Pose, RobotState, quat_from_euler,
                                       quat_multiply)
from vision_state_fusion.scene import (CameraIntrinsics, PinholeCamera,
                                       SceneConfig, generate_dataset, render)
from vision_state_fusion.scene.bases import Sample
from vision_state_fusion.scene.camera import SURFACE_BILLBOARD
from vision_state_fusion.scene.builder import make_label
from vision_state_fusion.utils import make_rng


def rendered_sample(pitch_deg=0., target=(2.5, 0.2, 0.1), yaw=0.2, roll_deg=0.,
                    schema='pitch'):
    roll = math.radians(roll_deg)
    observer = Pose.from_euler((0., 0., 0.), roll=roll,
                               pitch=math.radians(pitch_deg))
    target = Pose.from_euler(target, yaw=yaw)
    image = render(CameraIntrinsics(), observer, target, group_id=1)
    state = RobotState.from_pose(observer, schema).as_array()
    return Sample(image, state, make_label(observer, target, 'pose4'), 1,
                  observer_roll=roll)


class TestPhotometric(unittest.TestCase):

    def setUp(self) -> None:
        self.image = np.arange(256, dtype=np.uint8).reshape(16, 16)

    def test_neutral_parameters(self):
        np.testing.assert_array_equal(apply_gamma(self.image, 1.), self.image)
        np.testing.assert_array_equal(apply_exposure(self.image, 1.),
                                      self.image)
        np.testing.assert_array_equal(apply_range(self.image, 0., 255.),
                                      self.image)
        np.testing.assert_array_equal(blur(self.image, 0.), self.image)
        np.testing.assert_array_equal(vignette(self.image, 0.), self.image)
        np.testing.assert_array_equal(
            add_noise(self.image, 0., np.random.default_rng(0)), self.image)

    def test_gamma_and_exposure(self):
        darker = apply_gamma(self.image, 2.)
        self.assertTrue(np.all(darker <= self.image))
        self.assertEqual(darker.flat[255], 255)
        brighter = apply_exposure(self.image, 1.5)
        self.assertEqual(brighter.max(), 255)
        self.assertEqual(brighter.flat[10], 15)

    def test_range(self):
        out = apply_range(self.image, 20., 200.)
        self.assertEqual(out.min(), 20)
        self.assertEqual(out.max(), 200)

    def test_vignette_darkens_corners(self):
        flat = np.full((9, 9), 200, dtype=np.uint8)
        out = vignette(flat, 0.5)
        self.assertEqual(out[4, 4], 200)
        self.assertEqual(out[0, 0], 100)

    def test_blur_keeps_constant_images(self):
        flat = np.full((8, 8), 77, dtype=np.uint8)
        np.testing.assert_array_equal(blur(flat, 1.2), flat)

    def test_blur_matches_gaussian_kernel(self):
        image = np.zeros((15, 15), dtype=np.uint8)
        image[7, 7] = 200
        offsets = np.arange(-3, 4)
        w = np.exp(-offsets**2 / 2.)
        w /= w.sum()
        expected = np.zeros((15, 15))
        expected[4:11, 4:11] = 200. * np.outer(w, w)
        np.testing.assert_allclose(blur(image, 1.).astype(float),
                                   np.rint(expected), atol=1.)

    def test_noise_stream_does_not_depend_on_sigma(self):
        a, b = np.random.default_rng(1), np.random.default_rng(1)
        add_noise(self.image, 0., a)
        add_noise(self.image, 5., b)
        self.assertEqual(a.uniform(), b.uniform())


class TestGeometric(unittest.TestCase):

    def test_hflip(self):
        sample = rendered_sample()
        flipped = hflip(sample)
        np.testing.assert_array_equal(flipped.image, sample.image[:, ::-1])
        np.testing.assert_array_equal(flipped.label[[0, 2]],
                                      sample.label[[0, 2]])
        np.testing.assert_array_equal(flipped.label[[1, 3]],
                                      -sample.label[[1, 3]])
        np.testing.assert_array_equal(flipped.state, sample.state)
        self.assertEqual(hflip(flipped), sample)

    def test_hflip_pitch_roll(self):
        sample = Sample(np.zeros((4, 4)), [0.1, -0.05], [2., 0.3, 0., 0.5],
                        0)
        flipped = hflip(sample)
        np.testing.assert_allclose(flipped.state, [0.1, 0.05])

    def test_hflip_matches_mirrored_render(self):
        sample = rendered_sample(6., target=(2.2, 0.4, 0.1), yaw=0.3,
                                 roll_deg=4., schema='pitch_roll')
        mirror = rendered_sample(6., target=(2.2, -0.4, 0.1), yaw=-0.3,
                                 roll_deg=-4., schema='pitch_roll')
        flipped = hflip(sample)
        diff = np.abs(flipped.image.astype(float) - mirror.image.astype(float))
        self.assertLess(diff.mean(), 0.5)
        np.testing.assert_allclose(flipped.state, mirror.state, atol=1e-6)
        np.testing.assert_allclose(flipped.label, mirror.label, atol=1e-5)
        self.assertAlmostEqual(flipped.observer_roll, mirror.observer_roll)

    def test_hflip_rejects_pose_state(self):
        sample = Sample(np.zeros((4, 4)), np.zeros(7), [2., 0., 0., 0.], 0)
        with self.assertRaises(SchemaMismatchError):
            hflip(sample)

    def test_zero_pitch_warp_is_identity(self):
        sample = rendered_sample()
        warped = pitch_warp(sample, 0., CameraIntrinsics())
        diff = np.abs(warped.image.astype(int) - sample.image.astype(int))
        self.assertLessEqual(diff.max(), 1)

    def test_pitch_warp_matches_a_fresh_render(self):
        k = CameraIntrinsics()
        delta = math.radians(5.)
        sample = rendered_sample(0.)
        warped = pitch_warp(sample, delta, k)
        observer = Pose.from_euler((0., 0., 0.), pitch=delta)
        target = Pose.from_euler((2.5, 0.2, 0.1), yaw=0.2)
        expected = render(k, observer, target, group_id=1).astype(float)
        _, surface = PinholeCamera(k).trace(observer, target, group_id=1)
        # billboard pixels away from its outline
        inside = ndimage.binary_erosion(surface == SURFACE_BILLBOARD)
        self.assertGreater(inside.sum(), 200)
        self.assertGreater(expected[inside].std(), 10.)
        diff = np.abs(warped.image[inside] - expected[inside])
        self.assertLess(diff.mean(), 3.)
        unwarped = np.abs(sample.image[inside] - expected[inside])
        self.assertGreater(unwarped.mean(), 3.)
        np.testing.assert_array_equal(warped.label, sample.label)
        self.assertAlmostEqual(float(warped.state[0]), delta, places=6)

    def test_pitch_warp_uses_the_true_roll(self):
        k = CameraIntrinsics()
        camera = PinholeCamera(k)
        delta, roll = math.radians(8.), math.radians(5.)
        observer = Pose.from_euler((0., 0., 0.), roll=roll)
        pitched = Pose(observer.position,
                       quat_multiply(observer.orientation,
                                     quat_from_euler(0., delta, 0.)))
        without_roll = 0
        for z in np.linspace(-1., 1., 201):
            sample = Sample(np.zeros((64, 64)), [0.], [2., 0.8, z, 0.], 0,
                            observer_roll=roll)
            point = sample.label[:3].astype(np.float64)
            visible = camera.project(pitched, point) is not None
            self.assertEqual(pitch_warp(sample, delta, k) is not None,
                             visible, msg=f'z={z:.2f}')
            unknown = pitch_warp(sample.replace(observer_roll=None), delta, k)
            without_roll += (unknown is not None) != visible
        self.assertGreater(without_roll, 0)

    def test_pitch_warp_drops_targets_leaving_the_image(self):
        sample = Sample(np.zeros((64, 64)), [0.], [2., 0., 0.9, 0.], 0)
        k = CameraIntrinsics()
        self.assertIsNotNone(pitch_warp(sample, 0., k))
        self.assertIsNone(pitch_warp(sample, math.radians(10.), k))

    def test_pitch_warp_needs_a_pitch_channel(self):
        sample = random_dataset(n=1, state_dim=7)[0]
        with self.assertRaises(SchemaMismatchError):
            pitch_warp(sample, 0.1, CameraIntrinsics.centered(8, 8))

    def test_pitch_warp_range(self):
        with self.assertRaises(AssertionError):
            pitch_warp(rendered_sample(), math.radians(20.),
                       CameraIntrinsics())


class TestPipeline(unittest.TestCase):

    def test_identity_copies(self):
        data = random_dataset(n=4)
        config = AugmentConfig.identity(copies=3)
        augmented, discarded = augment_dataset(
            data, config, CameraIntrinsics.centered(8, 8))
        self.assertEqual(discarded, 0)
        self.assertEqual(len(augmented), 12)
        for i in range(len(augmented)):
            self.assertEqual(augmented[i], data[i // 3])

    def test_copies_differ(self):
        sample = rendered_sample()
        copies = augment_pipeline(sample, AugmentConfig(copies=4),
                                  make_rng(0, 0))
        self.assertGreaterEqual(len(copies), 1)
        for c in copies:
            self.assertFalse(np.array_equal(c.image, sample.image))
            self.assertEqual(c.group_id, sample.group_id)

    def test_deterministic_and_parallel(self):
        data = generate_dataset(SceneConfig(seed=2), n=4)
        config = AugmentConfig(copies=3, seed=9)
        serial = augment_dataset(data, config, jobs=1)
        parallel = augment_dataset(data, config, jobs=2)
        self.assertEqual(serial[0], parallel[0])
        self.assertEqual(serial[1], parallel[1])
        self.assertEqual(len(serial[0]) + serial[1], 12)
        other, _ = augment_dataset(data, AugmentConfig(copies=3, seed=10))
        self.assertNotEqual(serial[0], other)

    def test_invalid_config(self):
        with self.assertRaises(AssertionError):
            AugmentConfig(pitch_range_deg=20.)
        with self.assertRaises(AssertionError):
            AugmentConfig(copies=0)
        with self.assertRaises(AssertionError):
            AugmentConfig(range_lo=(0., 240.), range_hi=(230., 255.))


if __name__ == '__main__':
    unittest.main()
