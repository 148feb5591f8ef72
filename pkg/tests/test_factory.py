import os

from testfixtures import TempDirectory

from acic import ACICFactory, ACICException
from acic.config import Config

from tests.helpers.base_acic_test_case import BaseACICTestCase

SAMPLES = 'tests.helpers.sample_command_implementers'

def config_with_implementer(implementer, command_config=None, command_name='solve'):
    section = {'implementer': implementer}
    if command_config is not None:
        section['config'] = command_config
    return {
        'acic-config': {
            'schema-version': 1,
            command_name: section
        }
    }

class TestFactory(BaseACICTestCase):
    def test_init_valid_config(self):
        factory = ACICFactory({'acic-config': {'schema-version': 1}}, 'results')

        self.assertEqual(factory.results_dir_path, 'results')
        self.assertIsInstance(factory.config, Config)

    def test_init_with_config_object(self):
        config = Config({'acic-config': {'schema-version': 1}})
        factory = ACICFactory(config)

        self.assertIs(factory.config, config)
        self.assertEqual(factory.results_dir_path, 'acic-results')

    def test_init_invalid_config(self):
        with self.assertRaisesRegex(
                AssertionError,
                r"Failed to add invalid ACIC config. Missing expected top level key \(acic-config\): {'blarg-config': {}}"):
            ACICFactory({'blarg-config': {}})

    def test_run_unknown_command(self):
        factory = ACICFactory({'acic-config': {'schema-version': 1}})

        with self.assertRaisesRegex(AssertionError, r"Unknown command \(foo\)"):
            factory.run_command('foo')

    def test_run_command_implementer_does_not_exist(self):
        factory = ACICFactory(config_with_implementer('DoesNotExist'))

        with self.assertRaisesRegex(
                ACICException,
                r"Could not dynamically load command \(solve\) implementer \(DoesNotExist\)"
                r" from module \(acic.command_implementers.solve\) with class name \(DoesNotExist\)"):
            factory.run_command('solve')

    def test_run_command_module_does_not_exist(self):
        factory = ACICFactory(config_with_implementer('tests.helpers.nope.Foo'))

        with self.assertRaisesRegex(
                ACICException,
                r"Could not dynamically load command \(solve\) implementer \(tests.helpers.nope.Foo\)"
                r" from module \(tests.helpers.nope\) with class name \(Foo\)"):
            factory.run_command('solve')

    def test_run_command_implementer_is_not_a_command_implementer(self):
        factory = ACICFactory(config_with_implementer(f"{SAMPLES}.NotACommandImplementer"))

        with self.assertRaisesRegex(
                ACICException,
                r"Command \(solve\) is configured to use implementer"
                r" \(tests.helpers.sample_command_implementers.NotACommandImplementer\)"
                r" from module \(tests.helpers.sample_command_implementers\) with class name"
                r" \(NotACommandImplementer\), and dynamically loads as class"
                r" \(<class 'tests.helpers.sample_command_implementers.NotACommandImplementer'>\)"
                r" which is not a subclass of required parent class"
                r" \(<class 'acic.command_implementer.CommandImplementer'>\)."):
            factory.run_command('solve')

    def test_run_command_with_explicit_implementer(self):
        with TempDirectory() as temp_dir:
            results_dir_path = os.path.join(temp_dir.path, 'acic-results')
            factory = ACICFactory(
                config_with_implementer(f"{SAMPLES}.FooCommandImplementer"), results_dir_path)

            self.assertEqual(factory.run_command('solve'), {})
            self.assertTrue(os.path.isfile(os.path.join(results_dir_path, 'solve.json')))

    def test_run_command_missing_required_config(self):
        factory = ACICFactory(
            config_with_implementer(f"{SAMPLES}.RequiredConfigCommandImplementer"))

        with self.assertRaisesRegex(
                AssertionError,
                r"The runtime command configuration \({'optional-key': 'default'}\) is missing"
                r" the required configuration keys \(\['required-key'\]\)"):
            factory.run_command('solve')

    def test_run_command_with_required_config(self):
        with TempDirectory() as temp_dir:
            factory = ACICFactory(
                config_with_implementer(
                    f"{SAMPLES}.RequiredConfigCommandImplementer",
                    {'required-key': 'hello world'}),
                os.path.join(temp_dir.path, 'acic-results'))

            self.assertEqual(factory.run_command('solve'), {'required-key': 'hello world'})

    def test_run_command_unknown_config_key(self):
        factory = ACICFactory(
            config_with_implementer(f"{SAMPLES}.FooCommandImplementer", {'bogus': 1}))

        with self.assertRaisesRegex(
                AssertionError,
                r"Command \(solve\) does not accept configuration keys \['bogus'\]"):
            factory.run_command('solve')

    def test_run_command_failure_propagates(self):
        with TempDirectory() as temp_dir:
            factory = ACICFactory(
                config_with_implementer(f"{SAMPLES}.FailingCommandImplementer"),
                os.path.join(temp_dir.path, 'acic-results'))

            with self.assertRaisesRegex(ACICException, r"solver failed on purpose"):
                factory.run_command('solve')
