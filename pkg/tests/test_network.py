import numpy as np
import pytest

from cienet.dsp import ComplexSpectrogram, FramingConfig, Waveform, drc, stft
from cienet.errors import ParameterError, ShapeError
from cienet.interaction import interaction_block
from cienet.model_io import init_params
from cienet.netops import layer_norm, relu
from cienet.network import (
    HyperParams,
    basic_block_mdprnn,
    basic_block_mdptnet,
    channel_norm,
    decode,
    dual_path_block,
    encode,
    encode_spectra,
    extract,
    extract_mask,
    param_spec,
)

SMALL_FRAMING = FramingConfig(window_len=64, hop=32)


def small_hp(kind="mdprnn", num_blocks=1):
    return HyperParams(
        encoder_channels=8,
        block_channels=4,
        num_blocks=num_blocks,
        hidden=3,
        heads=2,
        alpha=0.5,
        block_kind=kind,
        framing=SMALL_FRAMING,
    )


def template_tensors(hp):
    """Zero weights, unit norm gains: every learned map collapses to zero."""
    out = {}
    for spec in param_spec(hp):
        out[spec.name] = np.ones(spec.shape) if spec.init == "ones" else np.zeros(spec.shape)
    return out


def random_tensors(hp, seed):
    rng = np.random.default_rng(seed)
    out = {}
    for spec in param_spec(hp):
        if spec.init == "ones":
            out[spec.name] = np.ones(spec.shape)
        elif spec.init == "zeros":
            out[spec.name] = np.zeros(spec.shape)
        else:
            out[spec.name] = 0.3 * rng.standard_normal(spec.shape)
    return out


def small_waves(seed, mix_len=400, enroll_len=300):
    rng = np.random.default_rng(seed)
    mix = Waveform(rng.standard_normal(mix_len))
    enroll = Waveform(rng.standard_normal(enroll_len))
    return mix, enroll


# ---------------------------------------------------------------- hyperparams


def test_hyperparams_dict_roundtrip():
    hp = HyperParams(block_kind="mdptnet", num_blocks=3, alpha=0.4)
    d = hp.to_dict()
    assert d["window_len"] == 256 and d["hop"] == 128
    assert HyperParams.from_dict(d) == hp


def test_hyperparams_zero_blocks_allowed():
    hp = HyperParams(num_blocks=0)
    assert hp.num_blocks == 0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"encoder_channels": 0},
        {"block_channels": -4},
        {"hidden": 0},
        {"num_blocks": -1},
        {"alpha": 0.0},
        {"alpha": 1.5},
        {"block_kind": "gru"},
        {"block_channels": 64, "heads": 3},
    ],
)
def test_hyperparams_rejects_bad_values(kwargs):
    with pytest.raises(ParameterError):
        HyperParams(**kwargs)


def test_hyperparams_from_dict_missing_key():
    d = HyperParams().to_dict()
    del d["hop"]
    with pytest.raises(ParameterError):
        HyperParams.from_dict(d)


# ----------------------------------------------------------------- param spec


def test_param_spec_names_unique_and_bracketed():
    for kind in ("mdprnn", "mdptnet"):
        specs = param_spec(HyperParams(block_kind=kind))
        names = [s.name for s in specs]
        assert len(names) == len(set(names))
        assert names[0] == "encoder.conv.weight"
        assert names[-1] == "decoder.conv.bias"
        for i in range(6):
            for axis in ("freq", "time"):
                prefix = f"extractor.block{i:02d}.{axis}."
                assert any(n.startswith(prefix) for n in names)


def test_param_spec_init_families():
    for kind in ("mdprnn", "mdptnet"):
        for spec in param_spec(HyperParams(block_kind=kind)):
            leaf = spec.name.rsplit(".", 1)[-1]
            if leaf == "gain":
                assert spec.init == "ones"
            elif leaf in ("bias", "shift") or leaf.startswith("b"):
                assert spec.init == "zeros"
            else:
                assert spec.init == "glorot_uniform"


def test_param_count_recurrent_default():
    # independent tally: conv/norm/proj bookkeeping plus per-direction
    # LSTM cost 4h*(w + h + 1) = 512*193 = 98816
    encoder = 256 * 4 * 3 * 3 + 256
    input_norm = 2 * 256
    input_proj = 64 * 256 + 64
    lstm_axis = 2 * 98816 + (64 * 256 + 64) + 2 * 64
    blocks = 6 * 2 * lstm_axis
    output_proj = 256 * 64 + 256
    decoder = 2 * 256 * 3 * 3 + 2
    expected = encoder + input_norm + input_proj + blocks + output_proj + decoder
    assert expected == 2_618_178
    assert sum(s.size for s in param_spec(HyperParams())) == expected


def test_param_count_attention_default():
    # each projection pair is 64*64 + 64 = 4160; four of them per
    # attention, plus the 4x feed-forward and two norms
    att = 4 * (64 * 64 + 64)
    ff = (256 * 64 + 256) + (64 * 256 + 64)
    axis = att + ff + 4 * 64
    expected = (256 * 4 * 9 + 256) + 512 + (64 * 256 + 64) \
        + 6 * 2 * axis + (256 * 64 + 256) + (2 * 256 * 9 + 2)
    assert expected == 647_490
    specs = param_spec(HyperParams(block_kind="mdptnet"))
    assert sum(s.size for s in specs) == expected


def test_param_spec_zero_blocks_has_no_block_tensors():
    specs = param_spec(HyperParams(num_blocks=0))
    assert not any(".block" in s.name for s in specs)


# -------------------------------------------------------------------- encoder


def test_encode_spectra_plane_order():
    # a centered delta kernel copies input plane c to output channel c,
    # pinning down the [mix real, mix imag, weighted real, weighted imag]
    # stacking order
    hp = small_hp()
    mix, enroll = small_waves(0)
    yc = drc(stft(mix, SMALL_FRAMING), hp.alpha)
    ec = drc(stft(enroll, SMALL_FRAMING), hp.alpha)
    rep = interaction_block(yc, ec)

    weight = np.zeros((4, 4, 3, 3))
    for c in range(4):
        weight[c, c, 1, 1] = 1.0
    tensors = {"encoder.conv.weight": weight, "encoder.conv.bias": np.zeros(4)}
    hp4 = HyperParams(
        encoder_channels=4, block_channels=4, num_blocks=0, hidden=3,
        heads=2, alpha=0.5, framing=SMALL_FRAMING,
    )
    feats = encode_spectra(yc, ec, tensors, hp4)
    assert feats.shape == (4, yc.frames, yc.bins)
    for c, plane in enumerate([yc.real, yc.imag, rep.real_part, rep.imag_part]):
        np.testing.assert_allclose(feats[c], relu(plane), atol=1e-12)


def test_encode_shape_and_nonnegativity():
    hp = small_hp()
    mix, enroll = small_waves(1)
    tensors = random_tensors(hp, 1)
    feats = encode(mix, enroll, tensors, hp)
    assert feats.shape == (8, SMALL_FRAMING.num_frames(len(mix)), SMALL_FRAMING.bins)
    assert np.all(feats >= 0.0)
    assert np.all(np.isfinite(feats))


def test_encode_rejects_rate_mismatch():
    hp = small_hp()
    rng = np.random.default_rng(2)
    mix = Waveform(rng.standard_normal(400), 8000)
    enroll = Waveform(rng.standard_normal(400), 16000)
    with pytest.raises(ParameterError):
        encode(mix, enroll, random_tensors(hp, 0), hp)


def test_encode_invariant_to_enrollment_frame_order():
    # the enrollment enters only through frame-wise weighting, so
    # shuffling its frames cannot change the features
    hp = small_hp()
    mix, enroll = small_waves(3)
    tensors = random_tensors(hp, 3)
    yc = drc(stft(mix, SMALL_FRAMING), hp.alpha)
    ec = drc(stft(enroll, SMALL_FRAMING), hp.alpha)
    perm = np.random.default_rng(4).permutation(ec.frames)
    ec_perm = ComplexSpectrogram(
        ec.real[perm], ec.imag[perm], ec.framing, ec.original_len,
        compressed_with_alpha=ec.compressed_with_alpha,
    )
    a = encode_spectra(yc, ec, tensors, hp)
    b = encode_spectra(yc, ec_perm, tensors, hp)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_channel_norm_moments():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((6, 4, 5)) * 3.0 + 1.0
    y = channel_norm(x, np.ones(6), np.zeros(6))
    np.testing.assert_allclose(y.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(y.var(axis=0), 1.0, atol=1e-4)


# ------------------------------------------------------------ dual-path block


def axis_tensors(hp, seed, freq_random, time_random):
    """One block's tensors with either axis zeroed out or randomized."""
    rng = np.random.default_rng(seed)
    out = {}
    for spec in param_spec(hp):
        if ".block00." not in spec.name:
            continue
        randomize = (".freq." in spec.name and freq_random) or (
            ".time." in spec.name and time_random
        )
        if spec.init == "ones":
            out[spec.name] = np.ones(spec.shape)
        elif randomize and spec.init == "glorot_uniform":
            out[spec.name] = 0.3 * rng.standard_normal(spec.shape)
        else:
            out[spec.name] = np.zeros(spec.shape)
    return out


def test_mdprnn_zero_weights_is_double_norm():
    # with all learned maps zero each axis pass reduces to a layer norm
    # over channels; the expected path spells out the two transposes
    hp = small_hp()
    rng = np.random.default_rng(6)
    u = rng.standard_normal((4, 3, 5))
    tensors = axis_tensors(hp, 0, freq_random=False, time_random=False)
    got = basic_block_mdprnn(u, tensors, "extractor.block00.")

    g, s = np.ones(4), np.zeros(4)
    step1 = layer_norm(u.transpose(1, 2, 0), g, s).transpose(2, 0, 1)
    expected = layer_norm(step1.transpose(2, 1, 0), g, s).transpose(2, 1, 0)
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_mdprnn_frequency_pass_is_frame_local():
    # only the frequency axis carries weights, so perturbing one frame
    # must leave every other frame untouched
    hp = small_hp()
    tensors = axis_tensors(hp, 7, freq_random=True, time_random=False)
    rng = np.random.default_rng(8)
    u = rng.standard_normal((4, 5, 6))
    u2 = u.copy()
    u2[:, 2, :] += 0.5
    a = basic_block_mdprnn(u, tensors, "extractor.block00.")
    b = basic_block_mdprnn(u2, tensors, "extractor.block00.")
    assert np.max(np.abs(a[:, 2, :] - b[:, 2, :])) > 1e-3
    mask = np.ones(5, dtype=bool)
    mask[2] = False
    np.testing.assert_allclose(a[:, mask, :], b[:, mask, :], atol=1e-12)


def test_mdprnn_time_pass_is_bin_local():
    hp = small_hp()
    tensors = axis_tensors(hp, 9, freq_random=False, time_random=True)
    rng = np.random.default_rng(10)
    u = rng.standard_normal((4, 5, 6))
    u2 = u.copy()
    # bump one channel only; a uniform shift would be erased by the
    # channel norm of the weightless frequency pass
    u2[0, :, 3] += 0.5
    a = basic_block_mdprnn(u, tensors, "extractor.block00.")
    b = basic_block_mdprnn(u2, tensors, "extractor.block00.")
    assert np.max(np.abs(a[:, :, 3] - b[:, :, 3])) > 1e-3
    mask = np.ones(6, dtype=bool)
    mask[3] = False
    np.testing.assert_allclose(a[:, :, mask], b[:, :, mask], atol=1e-12)


def test_mdptnet_zero_weights_is_double_norm_per_axis():
    # zero attention and feed-forward weights leave norm(norm(x)) per
    # axis pass, four norms in total across the block
    hp = small_hp(kind="mdptnet")
    rng = np.random.default_rng(11)
    u = rng.standard_normal((4, 3, 5))
    tensors = axis_tensors(hp, 0, freq_random=False, time_random=False)
    got = basic_block_mdptnet(u, tensors, "extractor.block00.", hp.heads)

    g, s = np.ones(4), np.zeros(4)

    def double_norm(x):
        return layer_norm(layer_norm(x, g, s), g, s)

    step1 = double_norm(u.transpose(1, 2, 0)).transpose(2, 0, 1)
    expected = double_norm(step1.transpose(2, 1, 0)).transpose(2, 1, 0)
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_mdptnet_frequency_pass_is_frame_local():
    hp = small_hp(kind="mdptnet")
    tensors = axis_tensors(hp, 12, freq_random=True, time_random=False)
    rng = np.random.default_rng(13)
    u = rng.standard_normal((4, 5, 6))
    u2 = u.copy()
    u2[:, 1, :] += 0.5
    a = basic_block_mdptnet(u, tensors, "extractor.block00.", hp.heads)
    b = basic_block_mdptnet(u2, tensors, "extractor.block00.", hp.heads)
    assert np.max(np.abs(a[:, 1, :] - b[:, 1, :])) > 1e-3
    mask = np.ones(5, dtype=bool)
    mask[1] = False
    np.testing.assert_allclose(a[:, mask, :], b[:, mask, :], atol=1e-12)


def test_mdptnet_single_element_grid():
    # one frame and one bin: attention over a single token still runs
    hp = small_hp(kind="mdptnet")
    tensors = axis_tensors(hp, 14, freq_random=True, time_random=True)
    u = np.random.default_rng(15).standard_normal((4, 1, 1))
    out = basic_block_mdptnet(u, tensors, "extractor.block00.", hp.heads)
    assert out.shape == (4, 1, 1)
    assert np.all(np.isfinite(out))


def test_dual_path_block_dispatch():
    rng = np.random.default_rng(16)
    u = rng.standard_normal((4, 3, 5))
    for kind, direct in (
        ("mdprnn", basic_block_mdprnn),
        ("mdptnet", basic_block_mdptnet),
    ):
        hp = small_hp(kind=kind)
        tensors = axis_tensors(hp, 17, freq_random=True, time_random=True)
        via_dispatch = dual_path_block(u, tensors, "extractor.block00.", hp)
        if kind == "mdprnn":
            expected = direct(u, tensors, "extractor.block00.")
        else:
            expected = direct(u, tensors, "extractor.block00.", hp.heads)
        np.testing.assert_array_equal(via_dispatch, expected)


# ----------------------------------------------------------- mask and decode


def test_extract_mask_shape_and_nonnegativity():
    for kind in ("mdprnn", "mdptnet"):
        hp = small_hp(kind=kind, num_blocks=2)
        tensors = random_tensors(hp, 18)
        feats = np.random.default_rng(19).standard_normal((8, 4, 6)) ** 2
        mask = extract_mask(feats, tensors, hp)
        assert mask.shape == (8, 4, 6)
        assert np.all(mask >= 0.0)


def test_extract_mask_zero_blocks_path():
    hp = small_hp(num_blocks=0)
    tensors = random_tensors(hp, 20)
    feats = np.random.default_rng(21).standard_normal((8, 3, 4)) ** 2
    mask = extract_mask(feats, tensors, hp)
    assert mask.shape == (8, 3, 4)
    assert np.all(mask >= 0.0)


def test_extract_mask_rejects_bad_features():
    hp = small_hp()
    tensors = random_tensors(hp, 22)
    with pytest.raises(ShapeError):
        extract_mask(np.zeros((7, 3, 4)), tensors, hp)
    with pytest.raises(ShapeError):
        extract_mask(np.zeros((8, 4)), tensors, hp)


def test_extract_mask_missing_tensor():
    hp = small_hp()
    tensors = random_tensors(hp, 23)
    del tensors["extractor.output_proj.weight"]
    feats = np.zeros((8, 3, 4))
    with pytest.raises(ParameterError, match="output_proj"):
        extract_mask(feats, tensors, hp)


def test_decode_zero_features_are_silence():
    hp = small_hp()
    tensors = template_tensors(hp)
    frames = SMALL_FRAMING.num_frames(500)
    masked = np.zeros((8, frames, SMALL_FRAMING.bins))
    wave = decode(masked, tensors, hp, original_len=500, sample_rate_hz=4000)
    assert len(wave) == 500
    assert wave.sample_rate_hz == 4000
    np.testing.assert_array_equal(wave.samples, np.zeros(500))


def test_decode_length_contract():
    # synthesis must cut the padded overlap-add result back to the
    # requested sample count, whatever the frame alignment
    hp = HyperParams(encoder_channels=4, block_channels=4, num_blocks=0,
                     hidden=3, heads=2)
    tensors = random_tensors(hp, 24)
    rng = np.random.default_rng(25)
    for n in (8000, 20000, 32000):
        frames = hp.framing.num_frames(n)
        masked = rng.standard_normal((4, frames, hp.framing.bins))
        wave = decode(masked, tensors, hp, original_len=n)
        assert len(wave) == n
        assert wave.sample_rate_hz == 8000
        assert np.all(np.isfinite(wave.samples))


# ------------------------------------------------------------------ full pass


def test_extract_deterministic():
    for kind in ("mdprnn", "mdptnet"):
        hp = small_hp(kind=kind)
        params = init_params(hp, seed=26)
        mix, enroll = small_waves(27, mix_len=700, enroll_len=500)
        a = extract(mix, enroll, params.tensors, hp)
        b = extract(mix, enroll, params.tensors, hp)
        assert len(a) == len(mix)
        assert a.sample_rate_hz == mix.sample_rate_hz
        assert np.all(np.isfinite(a.samples))
        np.testing.assert_array_equal(a.samples, b.samples)


def test_extract_depends_on_enrollment():
    hp = small_hp()
    params = init_params(hp, seed=28)
    mix, enroll = small_waves(29, mix_len=700, enroll_len=500)
    other = Waveform(np.random.default_rng(30).standard_normal(500))
    a = extract(mix, enroll, params.tensors, hp)
    b = extract(mix, other, params.tensors, hp)
    assert np.max(np.abs(a.samples - b.samples)) > 1e-10
