import random
import unittest
import numpy as np
from src.layerctx.config import AppConfig, Mode, RuleConfig, SetpointEntry
from src.layerctx.errors import ConfigError, ConstraintViolationError, ControllerError, SampleOrderError
from src.layerctx.manager import (
    AutonomicKnowledge,
    AutonomicManager,
    Comparator,
    EcaRule,
    MetricSample,
    PiController,
    PlanningFailure,
    pi_step,
)
from src.layerctx.webapp import WebApp


class TestPiController(unittest.TestCase):
    """Test cases for the PI control law."""

    def test_proportional_arithmetic(self):
        c = PiController(kp=1.0, ki=0.0, setpoint=5e6)
        self.assertAlmostEqual(pi_step(c, 2.5e6, 1.0), 0.5)

    def test_on_setpoint_with_empty_integral(self):
        c = PiController(kp=0.8, ki=0.3, setpoint=5e6)
        self.assertEqual(pi_step(c, 5e6, 1.0), 0.0)

    def test_upper_clamp(self):
        c = PiController(kp=1.0, ki=0.0, setpoint=5e6)
        self.assertEqual(pi_step(c, 0.0, 1.0), 1.0)
        c = PiController(kp=5.0, ki=0.0, setpoint=5e6)
        self.assertEqual(pi_step(c, 0.0, 1.0), 1.0)

    def test_initial_output_is_upper_bound(self):
        self.assertEqual(PiController().output, 1.0)
        self.assertEqual(PiController(output_min=0.25, output_max=0.25).output, 0.25)

    def test_invalid_steps(self):
        with self.assertRaises(ControllerError):
            PiController(setpoint=0.0).step(1.0, 1.0)
        with self.assertRaises(ControllerError):
            PiController().step(1.0, 0.0)
        with self.assertRaises(ControllerError):
            PiController(output_min=0.9, output_max=0.1)

    def test_output_always_within_bounds(self):
        rng = random.Random(3)
        c = PiController(setpoint=7.5e6)
        for _ in range(10_000):
            out = c.step(rng.uniform(0, 2e7), rng.uniform(0.01, 5.0))
            self.assertGreaterEqual(out, 0.0)
            self.assertLessEqual(out, 1.0)

    def test_anti_windup_bounds_the_integral(self):
        """Test that a constant saturating error cannot grow the integral without bound."""
        c = PiController(setpoint=5e6)
        for _ in range(100_000):
            c.step(0.0, 1.0)
        self.assertLess(abs(c.integral), 5e6 * 2 / c.ki)
        windup = PiController(setpoint=5e6, anti_windup=False)
        for _ in range(1_000):
            windup.step(0.0, 1.0)
        self.assertGreater(windup.integral, abs(c.integral))


class TestEcaRule(unittest.TestCase):
    """Test cases for edge-triggered rules."""

    def test_crossing_needs_an_edge(self):
        rule = EcaRule("r", "bandwidth", Comparator.GT, 8e6)
        self.assertTrue(rule.crossed(7e6, 9e6))
        self.assertFalse(rule.crossed(9e6, 9.5e6))
        self.assertFalse(rule.crossed(9e6, 9e6))
        self.assertFalse(rule.crossed(9e6, 7e6))

    def test_from_config_unknown_layer(self):
        app = WebApp()
        with self.assertRaises(ConfigError):
            EcaRule.from_config(RuleConfig(metric="bandwidth", op=">", threshold=1.0,
                                           activate=("nope",), name="bad"), app.registry)


class TestAutonomicManager(unittest.TestCase):
    """Test cases for the MAPE-K manager."""

    def setUp(self):
        """Set up test fixtures."""
        self.app = WebApp()
        self.eca = AutonomicManager.from_config(AppConfig(mode=Mode.ECA), self.app.registry)
        self.pi = AutonomicManager.from_config(AppConfig(), self.app.registry)

    def feed(self, manager, values, metric="bandwidth"):
        for t, value in enumerate(values):
            manager.ingest_sample(MetricSample(float(t), value, metric))

    def test_default_set_before_any_rule(self):
        self.assertEqual(self.eca.get_active_layers(), frozenset({self.app.high}))

    def test_upward_crossing_switches_to_low_band(self):
        self.feed(self.eca, [7e6, 9e6])
        self.assertEqual(self.eca.get_active_layers(), frozenset({self.app.low}))

    def test_two_crossings_return_to_high_band(self):
        self.feed(self.eca, [7e6, 9e6, 5e6])
        self.assertEqual(self.eca.get_active_layers(), frozenset({self.app.high}))

    def test_first_and_repeated_samples_do_not_fire(self):
        self.feed(self.eca, [9e6, 9e6, 9e6])
        self.assertEqual(self.eca.firings["high-to-low"], 0)

    def test_firings_equal_offline_crossings(self):
        """Test firing counts against a replay of the sample list."""
        rng = np.random.default_rng(11)
        values = list(rng.uniform(3e6, 11e6, size=500))
        self.feed(self.eca, values)
        up = sum(1 for p, c in zip(values, values[1:]) if not p > 8e6 and c > 8e6)
        down = sum(1 for p, c in zip(values, values[1:]) if not p < 6e6 and c < 6e6)
        self.assertEqual(self.eca.firings["high-to-low"], up)
        self.assertEqual(self.eca.firings["low-to-high"], down)

    def test_out_of_order_sample(self):
        self.eca.ingest_sample(MetricSample(5.0, 1.0))
        with self.assertRaises(SampleOrderError):
            self.eca.ingest_sample(MetricSample(4.0, 1.0))

    def test_history_is_bounded(self):
        self.feed(self.eca, [1.0] * 1500)
        self.assertEqual(len(self.eca.history), 1000)

    def test_refused_plan_keeps_previous_set(self):
        high, low = self.app.high, self.app.low
        both = EcaRule("both", "bandwidth", Comparator.GT, 1.0, activate=frozenset({low}))
        manager = AutonomicManager(AutonomicKnowledge(
            registry=self.app.registry, constraints=self.app.registry.constraints,
            rules=[both], default_layers=frozenset({high})))
        with self.assertLogs("src.layerctx.manager", level="WARNING"):
            self.feed(manager, [0.0, 2.0])
        self.assertEqual(manager.get_active_layers(), frozenset({high}))
        self.assertIsInstance(manager.events[0], PlanningFailure)
        self.assertEqual(manager.events[0].rule, "both")

    def test_invalid_configured_set_fails_at_construction(self):
        with self.assertRaises(ConstraintViolationError):
            AutonomicManager(AutonomicKnowledge(
                registry=self.app.registry, constraints=self.app.registry.constraints,
                default_layers=frozenset({self.app.high, self.app.low})))

    def test_when_active_condition(self):
        rule = RuleConfig(metric="bandwidth", op=">", threshold=8e6, name="guarded",
                          activate=("low_band",), deactivate=("high_band",), when_active=("low_band",))
        manager = AutonomicManager.from_config(AppConfig(mode=Mode.ECA, rules=(rule,)), self.app.registry)
        self.feed(manager, [7e6, 9e6])
        self.assertEqual(manager.firings["guarded"], 0)

    def test_assign_session_layers_follows_output(self):
        rng = np.random.default_rng(0)
        self.pi.controller.output = 1.0
        self.assertTrue(all(self.pi.assign_session_layers(rng) == {self.app.high} for _ in range(100)))
        self.pi.controller.output = 0.0
        self.assertTrue(all(self.pi.assign_session_layers(rng) == {self.app.low} for _ in range(100)))

    def test_assign_session_layers_fraction(self):
        rng = np.random.default_rng(42)
        self.pi.controller.output = 0.6
        draws = [self.pi.assign_session_layers(rng) for _ in range(10_000)]
        share = sum(1 for d in draws if d == {self.app.high}) / len(draws)
        self.assertGreaterEqual(share, 0.58)
        self.assertLessEqual(share, 0.62)
        for d in set(draws):
            self.assertTrue(self.app.registry.constraints.validate(d))

    def test_decisions_are_deterministic(self):
        def decisions(seed):
            manager = AutonomicManager.from_config(AppConfig(), self.app.registry)
            rng = np.random.default_rng(seed)
            out = []
            for t, value in enumerate([4e6, 6e6, 8e6, 9e6, 7e6, 5e6]):
                manager.ingest_sample(MetricSample(float(t), value))
                out.append(manager.assign_session_layers(rng))
            return out

        self.assertEqual(decisions(5), decisions(5))

    def test_update_setpoint(self):
        for t, expected in ((100, 7.5e6), (450, 9e6), (650, 5e6)):
            self.pi.update_setpoint(t)
            self.assertEqual(self.pi.setpoint, expected)

    def test_schedule_must_increase(self):
        with self.assertRaises(ConfigError):
            AutonomicKnowledge(registry=self.app.registry, constraints=self.app.registry.constraints,
                               setpoint_schedule=[(0.0, 1.0), (0.0, 2.0)])

    def test_pinned_fraction(self):
        manager = AutonomicManager.from_config(AppConfig(), self.app.registry, fraction=0.0)
        self.feed(manager, [1e6, 2e6, 3e6])
        self.assertEqual(manager.fraction, 0.0)

    def test_first_setpoint_from_config(self):
        config = AppConfig(setpoints=(SetpointEntry(0.0, 6e6),))
        manager = AutonomicManager.from_config(config, self.app.registry)
        self.assertEqual(manager.setpoint, 6e6)


if __name__ == '__main__':
    unittest.main()
