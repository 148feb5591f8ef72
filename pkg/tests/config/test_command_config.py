import os

from tests.helpers.base_acic_test_case import BaseACICTestCase

from acic.config import Config, ConfigValue
from acic.config.command_config import environment_variable_name

def command_config_of(config_dict, command_name='solve'):
    config = Config({
        Config.ACIC_CONFIG_KEY: {
            Config.ACIC_CONFIG_KEY_SCHEMA_VERSION: Config.SCHEMA_VERSION,
            **config_dict
        }
    })
    return config.get_command_config(command_name)

class TestEnvironmentVariableName(BaseACICTestCase):
    def test_dashes_and_case(self):
        self.assertEqual(environment_variable_name('tol-lambda'), 'ACIC_TOL_LAMBDA')
        self.assertEqual(environment_variable_name('seed'), 'ACIC_SEED')

class TestCommandConfig(BaseACICTestCase):
    def test_defaults_only(self):
        command_config = command_config_of({})

        self.assertEqual(command_config.get_config_value('tol', {'tol': 1e-6}), 1e-6)
        self.assertIsNone(command_config.get_config_value('missing', {'tol': 1e-6}))

    def test_command_config_beats_defaults(self):
        command_config = command_config_of({'solve': {'config': {'tol': 1e-8}}})

        self.assertEqual(command_config.get_config_value('tol', {'tol': 1e-6}), 1e-8)

    def test_global_defaults_only_for_known_keys(self):
        command_config = command_config_of({
            'global-defaults': {'seed': 11, 'horizon': 5.0},
        })
        runtime = command_config.get_copy_of_runtime_command_config({'seed': 0})

        self.assertEqual(ConfigValue.convert_leaves_to_values(runtime), {'seed': 11})

    def test_command_config_beats_global_defaults(self):
        command_config = command_config_of({
            'global-defaults': {'seed': 11},
            'solve': {'config': {'seed': 12}}
        })

        self.assertEqual(command_config.get_config_value('seed', {'seed': 0}), 12)

    def test_environment_beats_command_config(self):
        os.environ['ACIC_TOL'] = '1.0e-9'
        command_config = command_config_of({'solve': {'config': {'tol': 1e-8}}})

        self.assertEqual(command_config.get_config_value('tol', {'tol': 1e-6}), 1e-9)

    def test_environment_parsed_as_yaml(self):
        os.environ['ACIC_ALPHAS'] = '[0.1, 0.01]'
        os.environ['ACIC_TOL_LAMBDA'] = '1.0e-4'
        command_config = command_config_of({})

        self.assertEqual(
            command_config.get_config_value('alphas', {'alphas': None}), [0.1, 0.01])
        self.assertEqual(
            command_config.get_config_value('tol-lambda', {'tol-lambda': 1e-6}), 1e-4)

    def test_environment_ignores_unknown_keys(self):
        os.environ['ACIC_HORIZON'] = '3'
        command_config = command_config_of({})

        self.assertEqual(command_config.get_copy_of_runtime_command_config({'seed': 0}),
                         {'seed': 0})

    def test_environment_invalid_value(self):
        os.environ['ACIC_SEED'] = '[1, 2'
        command_config = command_config_of({})

        with self.assertRaisesRegex(
            ValueError,
            r"Environment variable \(ACIC_SEED\) is not a valid value:"
        ):
            command_config.get_config_value('seed', {'seed': 0})

    def test_flag_overrides_beat_environment(self):
        os.environ['ACIC_SEED'] = '5'
        command_config = command_config_of({})
        command_config.flag_overrides = {'seed': 6, 'tol': None}

        self.assertEqual(command_config.flag_overrides, {'seed': 6})
        self.assertEqual(command_config.get_config_value('seed', {'seed': 0}), 6)

    def test_flag_overrides_only_for_known_keys(self):
        command_config = command_config_of({})
        command_config.flag_overrides = {'tol': 1e-3}

        self.assertEqual(command_config.get_copy_of_runtime_command_config({'seed': 0}),
                         {'seed': 0})

    def test_command_config_overrides_win(self):
        os.environ['ACIC_SEED'] = '5'
        command_config = command_config_of({'solve': {'config': {'seed': 4}}})
        command_config.flag_overrides = {'seed': 6}
        command_config.command_config_overrides = {'seed': 7, 'extra': True}

        self.assertEqual(command_config.get_config_value('seed', {'seed': 0}), 7)
        # KEY=VALUE overrides are always applied, even for keys the command does not know
        self.assertTrue(command_config.get_config_value('extra', {'seed': 0}))

    def test_command_config_overrides_none(self):
        command_config = command_config_of({})
        command_config.command_config_overrides = None

        self.assertEqual(command_config.command_config_overrides, {})

    def test_merge_command_config(self):
        command_config = command_config_of({'solve': {'config': {'tol': 1e-8}}})
        command_config.merge_command_config({'seed': 3})
        command_config.merge_command_config(None)

        self.assertEqual(
            ConfigValue.convert_leaves_to_values(command_config.command_config),
            {'tol': 1e-8, 'seed': 3})

    def test_merge_command_config_conflict(self):
        command_config = command_config_of({'solve': {'config': {'tol': 1e-8}}})

        with self.assertRaisesRegex(
            ValueError,
            r"Error merging new command configuration into existing command configuration"
            r" for command \(solve\): Conflict at tol"
        ):
            command_config.merge_command_config({'tol': 1e-4})

    def test_runtime_config_is_a_copy(self):
        command_config = command_config_of({'solve': {'config': {'alphas': [0.1]}}})
        runtime = command_config.get_copy_of_runtime_command_config()
        runtime['alphas'].append(ConfigValue(0.01))

        self.assertEqual(command_config.get_config_value('alphas'), [0.1])

    def test_global_defaults_come_from_parent(self):
        command_config = command_config_of({'global-defaults': {'seed': 1}}, 'check')

        self.assertEqual(command_config.global_defaults, {'seed': ConfigValue(1)})
        self.assertEqual(command_config.command_name, 'check')
