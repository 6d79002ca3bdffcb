import unittest
from src.layerctx.context import with_layers, without_layers
from src.layerctx.dispatch import PartialKind, call, compose_chain, proceed
from src.layerctx.errors import DispatchError, NoNextDefinitionError
from src.layerctx.layers import Registry


class TestDispatch(unittest.TestCase):
    """Test cases for chain composition and proceed."""

    def setUp(self):
        """Set up test fixtures."""
        self.registry = Registry()
        self.bordered = self.registry.define_layer("bordered")
        self.shadowed = self.registry.define_layer("shadowed")
        self.trace = []
        self.figure = self.registry.register_method("Figure.print", lambda: self.trace.append("base"))
        self.border = self.registry.register_method("Border.print", lambda: self.trace.append("border"))
        self.figure.around(self.bordered)(lambda cursor: cursor.proceed())
        self.figure.around(self.shadowed)(lambda cursor: cursor.proceed())
        self.border.around(self.shadowed)(lambda cursor: cursor.proceed())
        self.ctx = self.registry.new_context()

    def test_chain_follows_reverse_activation_order(self):
        chain = with_layers(self.ctx, [self.bordered, self.shadowed],
                            lambda: compose_chain(self.ctx, self.figure))
        self.assertEqual([p.layer for p in chain.arounds], [self.shadowed, self.bordered])
        self.assertEqual(chain.describe(),
                         [("shadowed", "around"), ("bordered", "around"), ("base", "around")])

    def test_layer_without_partial_is_skipped(self):
        chain = with_layers(self.ctx, [self.bordered, self.shadowed],
                            lambda: compose_chain(self.ctx, self.border))
        self.assertEqual([p.layer for p in chain.arounds], [self.shadowed])

    def test_empty_context_chain_is_base(self):
        chain = compose_chain(self.ctx, self.figure)
        self.assertEqual(chain.arounds, ())
        self.assertEqual(chain.describe(), [("base", "around")])

    def test_suppressed_layer_leaves_chain(self):
        registry = Registry()
        a, b = registry.define_layer("A"), registry.define_layer("B")
        m = registry.register_method("m", lambda: 0)
        m.around(a)(lambda cursor: cursor.proceed())
        m.around(b)(lambda cursor: cursor.proceed())
        ctx = registry.new_context()
        chain = with_layers(ctx, [a, b], lambda: without_layers(ctx, [b], lambda: compose_chain(ctx, m)))
        self.assertEqual([p.layer for p in chain.arounds], [a])

    def test_around_without_proceed_short_circuits(self):
        registry = Registry()
        cache = registry.define_layer("cache")
        calls = []
        m = registry.register_method("request", lambda req: calls.append(req) or req * 2)
        m.around(cache)(lambda cursor, req: "cached")
        ctx = registry.new_context()
        self.assertEqual(with_layers(ctx, [cache], lambda: call(ctx, m, 7)), "cached")
        self.assertEqual(calls, [])

    def test_full_proceed_transparency(self):
        """Test that arounds returning proceed's value leave the base result unchanged."""
        registry = Registry()
        layers = [registry.define_layer(f"L{i}") for i in range(4)]
        m = registry.register_method("square", lambda x: x * x)
        for layer in layers:
            m.around(layer)(lambda cursor, x: proceed(cursor, x))
        ctx = registry.new_context()
        for x in range(-5, 6):
            self.assertEqual(with_layers(ctx, layers, lambda: call(ctx, m, x)), x * x)

    def test_proceed_may_change_arguments(self):
        registry = Registry()
        twice = registry.define_layer("twice")
        m = registry.register_method("inc", lambda x: x + 1)
        m.around(twice)(lambda cursor, x: cursor.proceed(x * 2))
        ctx = registry.new_context()
        self.assertEqual(with_layers(ctx, [twice], lambda: call(ctx, m, 5)), 11)

    def test_proceed_from_base_stage(self):
        registry = Registry()
        m = registry.register_method("m", lambda: 0)
        chain = compose_chain(registry.new_context(), m)
        with self.assertRaises(NoNextDefinitionError):
            chain.cursor(0).proceed()

    def test_proceed_twice_rejected(self):
        registry = Registry()
        a = registry.define_layer("A")
        m = registry.register_method("m", lambda: 1)

        @m.around(a)
        def twice(cursor):
            cursor.proceed()
            return cursor.proceed()

        ctx = registry.new_context()
        with self.assertRaises(DispatchError):
            with_layers(ctx, [a], lambda: call(ctx, m))

    def test_before_and_after_order(self):
        """Test CLOS-style combination: befores most recent first, afters reversed."""
        registry = Registry()
        a, b = registry.define_layer("A"), registry.define_layer("B")
        trace = []
        m = registry.register_method("m", lambda: trace.append("base") or "result")
        for layer in (a, b):
            m.before(layer)(lambda name=layer.name: trace.append(f"before {name}"))
            m.after(layer)(lambda name=layer.name: trace.append(f"after {name}"))
            m.around(layer)(lambda cursor, name=layer.name: trace.append(f"around {name}") or cursor.proceed())
        ctx = registry.new_context()
        result = with_layers(ctx, [a, b], lambda: call(ctx, m))
        self.assertEqual(result, "result")
        self.assertEqual(trace, ["before B", "before A", "around B", "around A", "base", "after A", "after B"])

    def test_afters_skipped_on_error(self):
        registry = Registry()
        a = registry.define_layer("A")
        trace = []

        def failing():
            raise ValueError("boom")

        m = registry.register_method("m", failing)
        m.after(a)(lambda: trace.append("after"))
        ctx = registry.new_context()
        with self.assertRaises(ValueError):
            with_layers(ctx, [a], lambda: call(ctx, m))
        self.assertEqual(trace, [])

    def test_transitive_calls_see_the_activation(self):
        """Test that a nested call inside a partial dispatches on the same context."""
        registry = Registry()
        bordered = registry.define_layer("bordered")
        trace = []
        border = registry.register_method("Border.print", lambda: trace.append("border"))
        figure = registry.register_method("Figure.print", lambda: trace.append("figure"))
        border.around(bordered)(lambda cursor: trace.append("bordered border") or cursor.proceed())

        @figure.around(bordered)
        def with_border(cursor):
            border()
            return cursor.proceed()

        ctx = registry.new_context()
        with_layers(ctx, [bordered], lambda: call(ctx, figure))
        self.assertEqual(trace, ["bordered border", "border", "figure"])

    def test_inactive_layer_has_no_effect(self):
        registry = Registry()
        never = registry.define_layer("never")
        m = registry.register_method("m", lambda x: x)
        m.add_partial(never, PartialKind.BEFORE, lambda x: self.fail("inactive partial ran"))
        self.assertEqual(call(registry.new_context(), m, 3), 3)


if __name__ == '__main__':
    unittest.main()
