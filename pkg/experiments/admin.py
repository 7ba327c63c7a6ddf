from django.contrib import admin
from .models import ExperimentRun, BoundRecord


class BoundRecordInline(admin.TabularInline):
    model = BoundRecord
    extra = 0
    readonly_fields = ['theorem_tag', 'degrees', 'steps', 'value', 'measured_error', 'clamped', 'created_at']


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ['command', 'system', 'degrees', 'status', 'output_path', 'created_at']
    list_filter = ['command', 'status', 'created_at']
    search_fields = ['system', 'output_path']
    readonly_fields = ['id', 'config', 'summary', 'created_at']
    inlines = [BoundRecordInline]


@admin.register(BoundRecord)
class BoundRecordAdmin(admin.ModelAdmin):
    list_display = ['theorem_tag', 'run', 'degrees', 'steps', 'value', 'measured_error', 'bound_holds', 'clamped']
    list_filter = ['theorem_tag', 'clamped', 'run__command']
    search_fields = ['run__system']
    readonly_fields = ['created_at']

    def bound_holds(self, obj):
        return obj.holds
    bound_holds.boolean = True
    bound_holds.short_description = 'Holds'
