import unittest
from src.layerctx.config import HIGH_BAND, LOW_BAND, ConstraintsConfig, PageModel, VariantBytes
from src.layerctx.errors import ConfigError, ConstraintViolationError
from src.layerctx.webapp import PageSink, Session, WebApp, build_page


class TestPageModel(unittest.TestCase):
    """Test cases for page composition."""

    def test_default_calibration(self):
        page = PageModel()
        self.assertEqual(page.high_bytes, 50_000)
        self.assertEqual(page.low_bytes, 20_000)

    def test_page_tree(self):
        home = build_page(PageModel())
        self.assertEqual(home.name, "Home")
        self.assertEqual([c.name for c in home.children], ["Component1", "Component2", "Component3", "Component4"])
        self.assertEqual([c.name for c in home.children[0].children], ["Component11", "Component12"])


class TestWebApp(unittest.TestCase):
    """Test cases for layered page rendering."""

    def setUp(self):
        """Set up test fixtures."""
        self.app = WebApp()
        self.ctx = self.app.registry.new_context()

    def session(self, *layers):
        return Session(id=1, user_id=1, layers=frozenset(layers), created_at=0.0)

    def test_high_band_page(self):
        sink = PageSink()
        self.assertEqual(self.app.render_page(self.ctx, self.session(self.app.high), sink), 50_000)
        self.assertEqual(sink.total, 50_000)
        self.assertEqual(sink.variants, {HIGH_BAND})

    def test_low_band_page_is_uniform(self):
        """Test that every component of a low_band page uses the low variant."""
        sink = PageSink()
        self.assertEqual(self.app.render_page(self.ctx, self.session(self.app.low), sink), 20_000)
        self.assertEqual(sink.variants, {LOW_BAND})

    def test_high_exceeds_low_for_any_valid_page(self):
        for first, second in ((1, 0), (2, 3), (6, 1)):
            page = PageModel(first_level=first, second_level=second,
                             home=VariantBytes(10, 9), first_level_bytes=VariantBytes(5, 1),
                             second_level_bytes=VariantBytes(3, 2))
            app = WebApp(page)
            ctx = app.registry.new_context()
            high = app.render_page(ctx, self.session(app.high))
            low = app.render_page(ctx, self.session(app.low))
            self.assertGreater(high, low)
            self.assertEqual(high, page.high_bytes)
            self.assertEqual(low, page.low_bytes)

    def test_both_bands_refused(self):
        with self.assertRaises(ConstraintViolationError):
            self.app.render_page(self.ctx, self.session(self.app.high, self.app.low))

    def test_session_variant(self):
        self.assertEqual(self.session(self.app.high).variant, HIGH_BAND)
        self.assertEqual(self.session(self.app.low).variant, LOW_BAND)

    def test_component_granularity_can_mix(self):
        choices = iter([{self.app.high}, {self.app.low}, {self.app.high}, {self.app.low}, {self.app.high}])
        sink = PageSink()
        total = self.app.render_by_component(self.ctx, lambda: frozenset(next(choices)), sink)
        self.assertEqual(sink.variants, {HIGH_BAND, LOW_BAND})
        self.assertEqual(total, sink.total)
        self.assertGreater(total, PageModel().low_bytes)
        self.assertLess(total, PageModel().high_bytes)

    def test_expected_bytes(self):
        self.assertEqual(self.app.expected_bytes(frozenset({self.app.low})), 20_000)
        self.assertEqual(self.app.expected_bytes(frozenset({self.app.high})), 50_000)

    def test_unknown_constraint_layer(self):
        with self.assertRaises(ConfigError):
            WebApp(constraints=ConstraintsConfig(excludes=(("high_band", "mid_band"),)))


if __name__ == '__main__':
    unittest.main()
