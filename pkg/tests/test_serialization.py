#!/usr/bin/env python

import os
import tempfile
import unittest

import numpy as np

import vision_state_fusion as vsf
from common import tiny_arch
from vision_state_fusion.errors import (BadMagicError, TruncatedFileError,
                                        UnknownPresetError,
                                        VersionMismatchError)
from vision_state_fusion.nets import (FusionVariant, Model, QuantModel,
                                      load_model, quantize, save_model)


class TestModelFiles(unittest.TestCase):

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'model.bin')
        rng = np.random.default_rng(0)
        self.images = rng.integers(0, 256, size=(3, 64, 64), dtype=np.uint8)
        self.states = rng.uniform(-0.3, 0.3, size=(3, 1)).astype(np.float32)

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_float_round_trip(self):
        model = Model(vsf.make('desknet'), FusionVariant('mlp_branch'),
                      seed=3)
        save_model(self.path, model)
        loaded = load_model(self.path)
        self.assertIsInstance(loaded, Model)
        self.assertEqual(loaded.variant, model.variant)
        self.assertEqual(loaded.seed, 3)
        for k, v in model.state_dict().items():
            np.testing.assert_array_equal(loaded.state_dict()[k], v)
        np.testing.assert_array_equal(loaded.predict(self.images, self.states),
                                      model.predict(self.images, self.states))

    def test_pose7_model(self):
        model = Model(vsf.make('desknet', outputs=7),
                      FusionVariant('single_neuron', state_dim=2))
        save_model(self.path, model)
        loaded = load_model(self.path)
        self.assertEqual(loaded.arch.outputs, 7)
        self.assertEqual(loaded.variant.state_dim, 2)

    def test_quantized_round_trip(self):
        model = Model(vsf.make('desknet'), FusionVariant('double_input'))
        qmodel = quantize(model, self.images, self.states)
        save_model(self.path, qmodel)
        loaded = load_model(self.path)
        self.assertIsInstance(loaded, QuantModel)
        self.assertEqual(list(loaded.quantized_convs()),
                         ['conv1', 'conv2', 'conv3'])
        for name, conv in qmodel.quantized_convs().items():
            other = loaded.quantized_convs()[name]
            np.testing.assert_array_equal(other.qweight, conv.qweight)
            self.assertEqual(other.input_params, conv.input_params)
        np.testing.assert_array_equal(
            loaded.predict(self.images, self.states),
            qmodel.predict(self.images, self.states))

    def test_format_errors(self):
        save_model(self.path, Model(vsf.make('desknet')))
        with open(self.path, 'rb') as f:
            data = f.read()
        cases = [(b'XXXX' + data[4:], BadMagicError),
                 (data[:4] + (7).to_bytes(4, 'little') + data[8:],
                  VersionMismatchError),
                 (data[:-3], TruncatedFileError)]
        for corrupted, error in cases:
            with open(self.path, 'wb') as f:
                f.write(corrupted)
            with self.assertRaises(error):
                load_model(self.path)

    def test_unregistered_architecture(self):
        save_model(self.path, Model(tiny_arch()))
        with self.assertRaises(UnknownPresetError):
            load_model(self.path)


if __name__ == '__main__':
    unittest.main()
