from acic.config import Config, ConfigValue

from tests.helpers.base_acic_test_case import BaseACICTestCase

class TestConfigValue(BaseACICTestCase):
    def test__eq__is_equal_basic(self):
        test1 = ConfigValue('foo1', None, None)
        test2 = ConfigValue('foo1', None, None)

        self.assertEqual(test1, test2)

    def test__eq__is_equal_diff_source_and_path_parts(self):
        test1 = ConfigValue('foo1', "does not matter for equality", ['a', 'b'])
        test2 = ConfigValue('foo1', "really does not matter for equality", ['1', '2'])

        self.assertEqual(test1, test2)

    def test__eq__is_not_equal_both_config_value_objects(self):
        test1 = ConfigValue('foo1', None, None)
        test2 = ConfigValue('foo2', None, None)

        self.assertNotEqual(test1, test2)

    def test__eq__is_not_equal_different_objects(self):
        self.assertNotEqual(ConfigValue('foo1', None, None), 'foo1')

    def test__repr__(self):
        value = ConfigValue(0.01, None, [Config.ACIC_CONFIG_KEY, 'solve', 'config', 'tol'])

        self.assertEqual(
            str(value),
            "ConfigValue(acic-config.solve.config.tol=0.01)"
        )

    def test_path(self):
        value = ConfigValue(0.1, None, [Config.ACIC_CONFIG_KEY, 'schedule', 'alphas', 0])

        self.assertEqual(value.path, 'acic-config.schedule.alphas.0')

    def test_default_path_parts(self):
        value = ConfigValue('x')

        self.assertEqual(value.path_parts, [])
        self.assertEqual(value.path, '')
        self.assertIsNone(value.parent_source)

    def test_value_is_a_copy(self):
        value = ConfigValue([1, 2])
        value.value.append(3)

        self.assertEqual(value.value, [1, 2])

    def test_convert_leaves_to_config_values(self):
        source = {
            Config.ACIC_CONFIG_KEY: {
                'schema-version': 1,
                'schedule': {
                    'alphas': [0.1, 0.01],
                    'domains': None
                },
                'solve': {
                    'config': {
                        'tol': 1e-6
                    }
                }
            }
        }

        converted = ConfigValue.convert_leaves_to_config_values(
            values=source[Config.ACIC_CONFIG_KEY],
            parent_source=source,
            path_parts=[Config.ACIC_CONFIG_KEY]
        )

        self.assertEqual(converted['schema-version'], ConfigValue(1))
        self.assertEqual(converted['schedule']['alphas'], [ConfigValue(0.1), ConfigValue(0.01)])
        self.assertIsNone(converted['schedule']['domains'])
        self.assertEqual(
            converted['schedule']['alphas'][1].path_parts,
            [Config.ACIC_CONFIG_KEY, 'schedule', 'alphas', 1])
        self.assertEqual(
            converted['solve']['config']['tol'].path, 'acic-config.solve.config.tol')

    def test_convert_leaves_keeps_existing_config_values(self):
        existing = ConfigValue('kept', 'somewhere', ['a'])
        converted = ConfigValue.convert_leaves_to_config_values({'a': existing})

        self.assertIs(converted['a'], existing)

    def test_convert_leaves_to_values(self):
        values = {
            'problem': {
                'builtin': ConfigValue('constant-f'),
                'parameters': {'kappa': ConfigValue(2.5)}
            },
            'alphas': [ConfigValue(0.1), 0.01],
            'plain': 'value'
        }

        self.assertEqual(
            ConfigValue.convert_leaves_to_values(values),
            {
                'problem': {
                    'builtin': 'constant-f',
                    'parameters': {'kappa': 2.5}
                },
                'alphas': [0.1, 0.01],
                'plain': 'value'
            }
        )

    def test_convert_leaves_to_values_of_leaf(self):
        self.assertEqual(ConfigValue.convert_leaves_to_values(ConfigValue(3)), 3)
        self.assertEqual(ConfigValue.convert_leaves_to_values(3), 3)
