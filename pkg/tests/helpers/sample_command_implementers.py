from acic import CommandImplementer, ACICException
from acic.config.config_value import ConfigValue


class FooCommandImplementer(CommandImplementer):
    @staticmethod
    def command_implementer_config_defaults():
        return {}

    def _run_command(self):
        return {}

class RequiredConfigCommandImplementer(CommandImplementer):
    @staticmethod
    def command_implementer_config_defaults():
        return {
            'optional-key': 'default'
        }

    @staticmethod
    def required_runtime_command_config_keys():
        return ['required-key']

    def _run_command(self):
        return {'required-key': self.get_config_value('required-key')}

class WriteConfigAsResultsCommandImplementer(CommandImplementer):
    @staticmethod
    def command_implementer_config_defaults():
        return {
            'seed': 0,
            'tol': 1e-6,
            'label': 'default'
        }

    def _run_command(self):
        print('writing configuration')
        runtime_config = ConfigValue.convert_leaves_to_values(
            self.get_copy_of_runtime_command_config())
        self.write_csv_file('table.csv', ['key', 'value'], sorted(runtime_config.items()))
        return runtime_config

class FailingCommandImplementer(CommandImplementer):
    @staticmethod
    def command_implementer_config_defaults():
        return {}

    def _run_command(self):
        raise ACICException('solver failed on purpose')

class NotACommandImplementer:
    pass
