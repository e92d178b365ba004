import pytest

from olle.config import PipelineConfig, load_config, parse_config_text
from olle.errors import ConfigError


class TestParser:
    def test_scalars_lists_and_comments(self):
        entries = parse_config_text(
            "# run settings\n"
            "seed = 7\n"
            "sensitivity = 1.5\n"
            "drop_urls = false\n"
            'output_dir = "out dir"\n'
            "posts = [a.jsonl, b.jsonl]\n"
            "languages = []\n"
        )
        assert entries["seed"] == 7
        assert entries["sensitivity"] == 1.5
        assert entries["drop_urls"] is False
        assert entries["output_dir"] == "out dir"
        assert entries["posts"] == ["a.jsonl", "b.jsonl"]
        assert entries["languages"] == []

    def test_dotted_keys_pass_through(self):
        entries = parse_config_text("lexicon.en = words_en.txt\n")
        assert entries["lexicon.en"] == "words_en.txt"

    @pytest.mark.parametrize(
        "line",
        ["just a line", "= value", "seed = 1\nseed = 2"],
    )
    def test_malformed_lines_rejected(self, line):
        with pytest.raises(ConfigError):
            parse_config_text(line)


class TestCoercion:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError) as err:
            load_config(overrides=["mystery_knob=1"])
        assert "mystery_knob" in str(err.value)

    def test_unknown_dotted_head_rejected(self):
        with pytest.raises(ConfigError):
            load_config(overrides=["mystery.en=x"])

    @pytest.mark.parametrize(
        "override",
        [
            "seed=abc",
            "seed=1.5",
            "seed=true",
            "sensitivity=soft",
            "drop_urls=1",
            "min_group_size=[1,2]",
        ],
    )
    def test_type_mismatches_rejected(self, override):
        with pytest.raises(ConfigError):
            load_config(overrides=[override])

    def test_single_post_becomes_tuple(self):
        cfg = load_config(overrides=["posts=only.jsonl"])
        assert cfg.posts == ("only.jsonl",)

    def test_maps_collect_dotted_entries(self):
        cfg = load_config(
            overrides=["lexicon.en=en.txt", "lexicon.ru=ru.txt", "representative_language.IN=en"]
        )
        assert cfg.lexicons == {"en": "en.txt", "ru": "ru.txt"}
        assert cfg.representative_language == {"IN": "en"}


class TestPrecedence:
    def test_overrides_beat_file_beat_defaults(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed = 3\nmin_group_size = 500\n")
        cfg = load_config(str(path), overrides=["seed=9"])
        assert cfg.seed == 9  # override wins
        assert cfg.min_group_size == 500  # file wins over default
        assert cfg.replicates == 1000  # untouched default

    def test_defaults_without_any_input(self):
        cfg = load_config()
        assert cfg.min_group_size == 1000
        assert cfg.heavy_poster_quantile == 0.75
        assert cfg.internet_floor == 0.25
        assert cfg.drop_intermediates is True

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.cfg"))

    def test_bare_override_rejected(self):
        with pytest.raises(ConfigError):
            load_config(overrides=["seed"])


class TestDerivedViews:
    def test_aggregation_and_filtering_views(self):
        cfg = load_config(overrides=["min_group_size=10", "min_chars=5"])
        assert cfg.aggregation().min_group_size == 10
        assert cfg.filtering().min_chars == 5

    def test_effective_jobs(self):
        assert load_config(overrides=["jobs=4"]).effective_jobs() == 4
        assert load_config().effective_jobs() >= 1
        with pytest.raises(ConfigError):
            load_config(overrides=["jobs=0"]).effective_jobs()

    def test_ranges_path_default_and_override(self):
        cfg = load_config(overrides=["output_dir=run1"])
        assert cfg.ranges_path().endswith("run1/loff_ranges.json")
        cfg = load_config(overrides=["ranges=bands.json"])
        assert cfg.ranges_path() == "bands.json"


class TestHash:
    def test_hash_stable_for_equal_configs(self):
        a = load_config(overrides=["seed=3"])
        b = load_config(overrides=["seed=3"])
        assert a.config_hash() == b.config_hash()
        assert len(a.config_hash()) == 12
        int(a.config_hash(), 16)

    def test_hash_changes_with_any_setting(self):
        base = load_config().config_hash()
        assert load_config(overrides=["seed=1"]).config_hash() != base
        assert load_config(overrides=["lexicon.en=x"]).config_hash() != base

    def test_resolved_is_flat_and_sorted_friendly(self):
        cfg = load_config(overrides=["lexicon.en=x", "posts=[a,b]"])
        flat = cfg.resolved()
        assert flat["lexicon.en"] == "x"
        assert flat["posts"] == "a,b"
        assert all(isinstance(v, str) for v in flat.values())
