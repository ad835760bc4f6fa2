# -*- coding: utf-8 -*-
from ...choices import TASKS
from ...inference import insert_objects
from .remove import SamplingCommand


class Command(SamplingCommand):
    help = 'Inserts the masked object of one video into a background video.'
    task = TASKS.INSERTION

    def add_command_arguments(self, parser):
        parser.add_argument('--background', required=True, help='background video directory')
        parser.add_argument('--object', required=True, dest='object_video',
                            help='video directory holding the object')
        super(Command, self).add_command_arguments(parser)

    def run(self, run, run_dir, options):
        background = self.read(options, 'background', 'background video')
        object_video = self.read(options, 'object_video', 'object video')
        mask = self.read(options, 'mask', 'mask')
        result = insert_objects(background, object_video, mask,
                                self.load_model(options), self.sample_config(run))
        return self.finish(result, options['background'], run_dir, options)
